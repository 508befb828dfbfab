from .body import (BodyDef, BodyDefError, JointDef, LinkDef, Model, ObjectDef, SimParams, Terrain,
                   build_model, builtin_body, load_body, null_body, save_body)
from .core import (CONTROL_HZ, DEFAULT_SUBSTEPS, InvalidState, SimulationDiverged, Simulator,
                   export_csv)
from .state import SimState
