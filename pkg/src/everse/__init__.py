"""Analytic sphere eversion: surfaces, checks, events and meshes."""
from .errors import (
    DegenerateError, DomainError, EverseError, ForbiddenStageError, ScheduleError,
    SingularMapError, SmoothnessError,
)
from .surface import (
    ParamPoint, StageParams, SurfaceParams, damp_map, family_point, halfway_point,
    inversion_map, pipeline, plane_inversion, theta_to_h, unfold_sphere_point,
)
from .smoothness import SmoothnessReport, normal_vector, smoothness_margin
from .events import EventRecord, event_timeline, triple_points
from .meshio import MeshFrame, StageSchedule, default_schedule, export_mesh, parse_schedule, tessellate

__version__ = "0.1.0"
