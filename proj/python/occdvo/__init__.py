"""Moving-object detection by occlusion accumulation with masked dense RGB-D odometry.

Images are numpy arrays indexed [row, column]; depth is in meters with 0 for
unmeasured pixels; twists are (v, w) 6-vectors and poses 4x4 matrices.
"""

from ._core import (
    CameraIntrinsics,
    ConfigError,
    DataError,
    DegenerateError,
    DegenerateResidualError,
    DvoParams,
    Error,
    FormatError,
    GeometryError,
    IoError,
    NewAreaGradient,
    NumericalError,
    OcclusionDetector,
    OcclusionParams,
    PoseMode,
    RunConfig,
    RunError,
    __version__,
    background_mask,
    bisquare_derivative,
    bisquare_rho,
    bisquare_weight,
    compensate_depth,
    estimate_pose,
    exp_se3,
    export_suite,
    f1_frame,
    log_se3,
    occlusion_map,
    predict_new_area,
    project,
    render_suite,
    rpe,
    run,
    suite_intrinsics,
    suite_names,
    unproject,
)

__all__ = [name for name in dir() if not name.startswith("_")]
