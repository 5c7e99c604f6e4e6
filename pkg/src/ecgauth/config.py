# Corpus
SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.tsv"
TRACE_SUFFIX = ".ecg"
PEAKS_SUFFIX = ".peaks"
TRAIN_FRACTION = 0.8

# Signal conditioning
MAINS_HZ = 50.0  # UK mains; use 60.0 for North American recordings
MAINS_Q = 30.0
HP_CUTOFF_HZ = 0.5
LP_CUTOFF_HZ = 40.0
FILTER_ORDER = 4
# An impulse response counts as settled once its envelope is below this
TRANSIENT_DECAY = 1e-12

# Segmentation
WAVELET_SCALE_S = 0.03
THRESHOLD_WINDOW_S = 1.5
THRESHOLD_FACTOR = 2.0
REFRACTORY_S = 0.25
PRE_R_S = 0.25
POST_R_S = 0.45
REJECT_FRACTION = 0.2
REFINE_S = 0.04

# Features
N_COMPONENTS = 25
SCALE_FLOOR = 1e-8
RANK_TOLERANCE = 1e-10  # relative to the largest eigenvalue

# Classifiers
SVM_C = (0.1, 1.0, 10.0, 100.0)
SVM_GAMMA = (0.001, 0.01, 0.1, 1.0)
KNN_K = (1, 3, 5, 9)
LOGISTIC_L2 = (0.001, 0.01, 0.1, 1.0)
CV_FOLDS = 5
SVM_TOL = 1e-3
SVM_MAX_ITER = 100_000
SVM_CACHE_MB = 200.0
LOGISTIC_TOL = 1e-6
LOGISTIC_MAX_ITER = 50_000
ARMIJO_C = 1e-4

# Experiments
SEED = 0
OUT_DIR = "results"
MODELS = ("svm",)
PROTOCOL_B_RESELECT = False
DUMP_SCORES = False
THREADS_ENV = "ECG_AUTH_THREADS"

# Synthetic corpora
SYNTH_SUBJECTS = 10
SYNTH_DURATION_S = 240.0  # per session, split evenly over the recordings
SYNTH_RECORDINGS = 2
SYNTH_SAMPLE_RATE_HZ = 300.0
SYNTH_BASELINE_MV = 0.1
SYNTH_BASELINE_HZ = 0.25
SYNTH_MAINS_MV = 0.03
SYNTH_MAINS_HZ = 50.0
SYNTH_WHITE_MV = 0.02
SYNTH_DRIFT = 0.15
RR_FLOOR_S = 0.4

# Figures
SVG_HASH_SALT = "ecgauth"
FIGURE_SIZE = (8.0, 4.5)
PLOT_SPAN_S = 10.0  # seconds of trace drawn by segment --plot
