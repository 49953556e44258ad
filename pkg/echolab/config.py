from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    # Symplecticity / conservation tolerances
    TOL_SYMP_FLOW: float = 1e-8       # integrated flows
    TOL_SYMP_ALGEBRA: float = 1e-10   # algebraic constructions
    TOL_ENERGY: float = 1e-9
    CAUSTIC_TOL: float = 1e-12
    BRANCH_MAX_STEP: float = 0.5      # max relative change of det between continuation steps
    REVIVAL_TOL: float = 1e-6

    # Classical integrator
    INTEGRATOR_METHOD: str = "DOP853"
    INTEGRATOR_RTOL: float = 1e-12
    INTEGRATOR_ATOL: float = 1e-12
    QUADRATURE_RTOL: float = 1e-12

    # Quantum oracle
    ORACLE_MIN_POINTS: int = 256
    ORACLE_DT: float = 1e-3
    ORACLE_WIDTH_SIGMAS: float = 8.0
    ORACLE_BOUNDARY_TOL: float = 1e-12
    ORACLE_NORM_TOL: float = 1e-10

    # Revivals
    DEFAULT_THETA: float = 0.8
    DEFAULT_THETA_PRIME: float = 0.4
    COLLAPSE_THRESHOLD: float = 0.05
    POISSON_TERM_CUTOFF: float = 1e-18

    # Property suites / CLI
    PROPERTY_SAMPLES: int = 1000
    DEFAULT_SEED: int = 20240101
    OUTPUT_DIR: str = "results"
    LOG_LEVEL: str = "INFO"

    class Config:
        case_sensitive = True
        env_prefix = "ECHO_LAB_"
        env_file = ".env"

settings = Settings()
