"""
Here all the constants for the simulator, the stable-state solver, the planner,
the metrics and the baselines.

None of these values are given by the method description; they are the choices
this project runs with. Scene-level physics values live in config/scenes.yaml.
"""

# --- Physics ---
GRAVITY = 9.81
DT = 0.01
ACTION_DURATION = 0.25            # 25 substeps
CONTACT_STIFFNESS = 1.0e4         # N/m
CONTACT_DAMPING = 50.0            # N*s/m
FRICTION_ITERATIONS = 4           # Jacobi sweeps of the friction clamp per substep
DIVERGENCE_LIMIT = 1.0e6

# --- Stable states (augmented Lagrangian) ---
AL_INITIAL_PENALTY = 10.0
AL_PENALTY_GROWTH = 10.0
AL_MAX_PENALTY = 1.0e8
AL_MAX_OUTER = 20
AL_MAX_INNER = 200
AL_EQ_TOL = 1.0e-4
AL_INEQ_TOL = 1.0e-4
AL_GRAD_TOL = 1.0e-6
MAX_ATTEMPTS_PER_STATE = 100
HOLD_TIME = 1.0                   # s, validation rollout
HOLD_DRIFT_TOL = 0.02             # m
HOLD_SPEED_TOL = 0.05             # m/s
SEPARATION_TOL = 1.0e-3           # m, allowed penetration of a returned state
SCENE_EXTENT_SCALE = 1.5

# --- Planner ---
N_MAX = 2500
M_STABLE = 26
K_NEAREST = 16
N_BEST = 16
N_CANDIDATES = 64
W_OBJ = 10.0
W_ROB = 1.0
W_VEL = 0.1
EPSILON_FRACTION = 0.05           # of the scene diameter under the weighted metric
PROGRESS_TOL = 1.0e-6
LOG_EVERY = 250

# --- Metrics ---
KL_SAMPLE_N = 100
KL_K = 10
KL_REPEATS = 10
ENTROPY_MIN_POOL = 100

# --- Baselines ---
GOAL_BIAS = 0.2
UNIFORM_VARIANT_STABLE_PROB = 0.2
PS_HORIZON = 3
PS_ITERATIONS = 1
PS_SAMPLES = 16
SWEEP_VALUES = (1, 2, 4, 8, 16)
STABLE_SWEEP_VALUES = (25, 50, 100, 250, 500)
