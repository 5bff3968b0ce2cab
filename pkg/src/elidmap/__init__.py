"""Multi-LiDAR registration into a merged indoor map.

Pipeline: calibrate IMU gravity readings per sensor, estimate relative
roll/pitch from gravity and yaw from middle-ring wall segments, recover the
remaining translation per axis with small ICP problems on operator-selected
planar point pairs, then merge every transformed cloud onto the reference.
The merged map feeds a voxel-grid planner that emits drive-command scripts.
"""

from .errors import ElidError
from .geometry import (
    EulerAngles,
    Point,
    PointCloud,
    RigidTransform,
    apply_transform,
    build_rotation_matrix,
    compose_transform,
    invert_transform,
)

__all__ = [
    "ElidError",
    "EulerAngles",
    "Point",
    "PointCloud",
    "RigidTransform",
    "apply_transform",
    "build_rotation_matrix",
    "compose_transform",
    "invert_transform",
]

__version__ = "0.1.0"
