"""Safety-filtered teleoperation with multi-directional vibrotactile feedback.

The package splits into small, separately testable layers:

* geometry     - safety fields (h, grad, Hessian) and vehicle dynamics
* cbf          - barrier constraints and safe-input projections
* directions   - the canonical 32-direction cue set and layout container
* feedback     - per-obstacle cue rendering and the global-force baseline
* chain        - two-byte daisy-chain actuator protocol
* mlp          - from-scratch MLP with total-variation regularization
* layout_fit   - synthetic body mapping data and layout optimization
* scenario     - tunnel scenario generation
* sim          - scripted pilots, trials, batch runs
* server       - websocket teleoperation server
* cli          - command-line entry points
"""

from .geometry import (
    DegeneratePoint,
    Plane,
    SafetyField,
    SphereMargin,
    Superellipsoid,
    UavState,
    eval_h,
    grad_h,
    hess_h,
    step_dynamics,
)
from .cbf import (
    CbfGains,
    HalfspaceConstraint,
    InfeasibleDegenerate,
    NotConverged,
    SafeInput,
    build_constraint,
    project_halfspace,
    project_intersection,
)
from .directions import (
    ActuatorLayout,
    canonical_directions,
    min_pairwise_angle,
    spherical_to_direction,
)
from .feedback import (
    FeedbackConfig,
    FeedbackFrame,
    global_force_or_zero,
    quantize_level,
    render_feedback,
    render_global_force,
    select_actuator,
)
from .chain import (
    ChainConfig,
    ChainMessage,
    ChainRig,
    FramingError,
    RangeError,
    UnitState,
    chain_latency,
    decode,
    encode,
    frame_to_commands,
    step_unit,
)
from .mlp import (
    MlpModel,
    NonFiniteLoss,
    TrainConfig,
    TrainResult,
    load_model,
    save_model,
    train,
    tv_on_grid,
)
from .layout_fit import (
    BodyModel,
    MappingSample,
    generate_synthetic_dataset,
    load_dataset,
    nearest_surface_point,
    optimize_layout,
    save_dataset,
    train_mapping,
)

__version__ = "0.1.0"
