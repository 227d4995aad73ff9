"""Constants for the heat kernel learning project."""

# Numerical Constants
NORM_FLOOR = 1e-12
KERNEL_MIN_BANDWIDTH2 = 1e-8
MEASURE_SUM_TOLERANCE = 1e-10

# Optimizer Constants
ADAM_EPS = 1e-8
ADAM_DEFAULT_BETAS = (0.9, 0.999)
ADAM_GAN_BETAS = (0.5, 0.999)

# Sinkhorn Constants
SINKHORN_EPS_FRACTION = 0.05
SINKHORN_MAX_ITER = 100
SINKHORN_TOL = 1e-9
EXACT_OT_MAX_SUPPORT = 8

# Heat Kernel Learning Defaults
HK_ALPHA = 1.0
HK_BETA = 5.0
HK_LAMBDA = 0.1
HK_INNER_STEPS = 5
HK_LEARNING_RATE = 1e-3

# SVGD Defaults
SVGD_STEP_SIZE = 5e-2
SVGD_ADAGRAD_ALPHA = 0.9
SVGD_ADAGRAD_FUDGE = 1e-6
SVGD_ITERATIONS = 500
GAUSS_KERNEL_HIDDEN = (32, 32)
GAUSS_SINKHORN_ITERS = 20
BNN_HIDDEN_UNITS = 50
BNN_PARTICLES = 10
BNN_TRAIN_FRACTION = 0.9
BNN_KERNEL_HIDDEN = (32,)
BNN_PRIOR_SCALE = 1.0
BNN_GAMMA_PRIOR = (1.0, 0.1)
BNN_ITERATIONS = 1000
BNN_STEP_SIZE = 1e-2

# Generative Model Defaults
GENERATOR_NOISE_DIM = 8
RING_MODES = 8
RING_RADIUS = 2.0
RING_STD = 0.05
MODE_COVERAGE_FRACTION = 0.02
EVAL_RBF_BANDWIDTH2 = 1.0
GAN_GAMMAS = (4.0, 0.1, 0.0, 0.1, 0.1)
GAN_ALPHA = 0.1
GAN_BETA = 1.0
GAN_LAMBDA = 4.0
GAN_ZETA = 1.0
GAN_GENERATOR_STEPS = 2000
GAN_KERNEL_STEPS = 5
GAN_BATCH_SIZE = 64
GAN_GENERATOR_LR = 1e-3
GAN_KERNEL_LR = 1e-3
GAN_FEATURE_DIM = 16
GAN_EVAL_SAMPLES = 1000

# Toy Experiment Constants
TOY_NUM_POINTS = 512
TOY_DOMAIN = (-10.0, 10.0)
TOY_TIME_PER_ITERATION = 0.01
TOY_CHECKPOINTS = (1, 5, 20, 50)
TOY_GRID_STEP = 0.02
TOY_BATCH_SIZE = 128
TOY_SINKHORN_ITERS = 50
TOY_INIT_TIME = 0.25
TOY_MSE_GATE = 2.5e-3

# Oracle Constants
CIRCLE_TAIL_TOLERANCE = 1e-12
ORACLE_RESIDUAL_TOLERANCE = 1e-4

# Artifact Constants
CSV_FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"
PACKAGE_NAME = "heat-kernel-learning"

# Exit Codes
EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_RUN_FAILED = 1
EXIT_IO_ERROR = 2

# Environment
THREADS_ENV_VAR = "HK_THREADS"
BLAS_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
EXPERIMENTS = ("toy1d", "svgd-gauss", "svgd-bnn", "gan2d", "validate")
