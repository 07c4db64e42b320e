"""Adaptive testing engine.

Stage 1 calibrates a question pool from large-scale human response logs
(joint MLE of the three-parameter-logistic model); stage 2 runs
Fisher-information-driven adaptive test sessions with a human expert
grading each response, and the simulator reproduces the estimation
efficiency / reliability experiments on synthetic examinees.
"""

from .ability import (
    AbilityEstimate,
    AbilityEstimator,
    GradedResponse,
    asymptotic_variance,
    estimate_ability,
    standard_error,
)
from .calibration import (
    CalibratedPool,
    CalibrationConfig,
    FitReport,
    JointCalibrator,
    PoolStatistics,
    ResponseLog,
    calibrate,
    pool_statistics,
    split_train_validation,
    standardize_scale,
)
from .datastore import DatasetManifest, EventLogWriter, ingest_logs, load_pool, read_event_log, save_pool
from .errors import (
    BothEmptyError,
    CorruptLogError,
    DuplicateLogWarning,
    EmptyConceptPoolError,
    EmptyDatasetError,
    EmptyResponsesError,
    EndpointUnreachableError,
    IrtCatError,
    ParseError,
    PoolExhaustedError,
    PoolTooSmallError,
    SchemaError,
    SessionNotFinishedError,
    SessionStoppedError,
    VersionMismatchError,
    WrongStateError,
)
from .irt import (
    EPS,
    THETA_MAX,
    THETA_MIN,
    ItemParams,
    ModelKind,
    clamp_theta,
    item_information,
    prob_correct,
    prob_derivative,
    response_loglik,
)
from .selection import FISHER, RANDOM, CandidateSet, SelectionPolicy, information_profile, select_next
from .session import (
    DiagnosticReport,
    SessionStatus,
    StoppingRule,
    StopReason,
    TestSession,
    build_report,
    normalize_against_humans,
    replay_session,
    start_session,
    submit_grade,
)
from .simulate import (
    SimulationReport,
    SyntheticExaminee,
    jaccard,
    make_synthetic_pool,
    oracle_response,
    run_mse_experiment,
    run_se_experiment,
    run_variance_check,
    write_report_files,
)

__version__ = "0.1.0"
