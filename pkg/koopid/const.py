from typing import Final

# Identification options
M1 = "m1"
DEFAULT_M1 = 1
M_F = "m_f"
DEFAULT_M_F = 3
RCOND = "rcond"
# None means machine epsilon times the largest matrix dimension
DEFAULT_RCOND = None
ESTIMATE_DIFFUSION = "estimate_diffusion"
DEFAULT_ESTIMATE_DIFFUSION = False
INPUT_DIM = "input_dim"
DEFAULT_INPUT_DIM = None
RESCALE = "rescale"
DEFAULT_RESCALE = False

# Simulation options
TRAJECTORIES = "trajectories"
SUBSTEPS = "substeps"
DEFAULT_SUBSTEPS = 100
SEED = "seed"
DEFAULT_SEED = 0
SIGMA_MEAS = "sigma_meas"
DEFAULT_SIGMA_MEAS = 0.01
SIGMA_PROC = "sigma_proc"
DEFAULT_SIGMA_PROC = 0.0
INPUT_SIGNAL = "input_signal"
NOISY_INITIAL = "noisy_initial"
DEFAULT_NOISY_INITIAL = False

INPUT_SIGNALS: Final = ("cos", "sin", "zero")

# Any state component beyond this magnitude marks a trajectory as divergent
DIVERGENCE_GUARD = 1e6

# Relative tolerance when checking that snapshot times are evenly spaced
SAMPLING_TOLERANCE = 1e-9

# Relative tolerance on sample spacing read back from CSV files
TIME_TOLERANCE = 1e-6

# Eigenvalues closer than this to the negative real axis count as on it
BRANCH_CUT_TOLERANCE = 1e-10

# Warn when a log-eigenvalue leaves this fraction of the strip |Im z| < pi
ALIASING_FRACTION = 0.9

# Largest imaginary part (relative) accepted when dropping the imaginary part of logm
LOGM_IMAG_TOLERANCE = 1e-8

# Network benchmark
NETWORK_DIM = 12
NETWORK_TERMS = 3
# Draws are kept only if probe trajectories from [-1, 1]^n stay in |x| <= bound
NETWORK_BOUND = 3.0
NETWORK_HORIZON = 1.0
NETWORK_PROBES = 500
NETWORK_ATTEMPTS = 1000
DEFAULT_LINK_THRESHOLD = 0.1

# CLI
OUTPUT_DIR_ENV = "KOOPID_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "koopid-output"
MANIFEST_FILE = "manifest.json"
DATASET_CSV = "dataset.csv"
DATASET_SIDECAR = "dataset.json"
TRUTH_FILE = "truth.json"
RESULT_FILE = "result.json"
SCATTER_FILE = "scatter.csv"
ROC_FILE = "roc.csv"
RUNS_FILE = "runs.csv"
SUMMARY_FILE = "summary.csv"

LAYOUT_PAIRS = "pairs"
LAYOUT_TRAJECTORIES = "trajectories"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
