from pydantic_settings import BaseSettings
from typing import Any, Dict
import os
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


class Settings(BaseSettings):
    """
    Toolkit settings that can be configured via environment variables.

    Every numerical default used by the library lives here so that reports can
    echo the exact values a run was produced with.
    """

    # Environment settings
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "local")
    SERVICE_NAME: str = os.getenv("SERVICE_NAME", "qgraph")
    VERSION: str = os.getenv("VERSION", "0.1.0")

    # Logging settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "info")
    LOG_STYLE: str = os.getenv("LOG_STYLE", "auto")

    # Parallelism
    QGRAPH_THREADS: int = int(os.getenv("QGRAPH_THREADS", "1"))

    # Boundary conditions
    QGRAPH_RANK_TOL: float = float(os.getenv("QGRAPH_RANK_TOL", "1e-10"))
    QGRAPH_RANK_GAP: float = float(os.getenv("QGRAPH_RANK_GAP", "1e3"))
    QGRAPH_SELF_ADJOINT_TOL: float = float(os.getenv("QGRAPH_SELF_ADJOINT_TOL", "1e-10"))

    # Graph and orbits
    QGRAPH_STRUCTURAL_ZERO_TOL: float = float(os.getenv("QGRAPH_STRUCTURAL_ZERO_TOL", "1e-14"))
    QGRAPH_REFERENCE_K: float = float(os.getenv("QGRAPH_REFERENCE_K", "1.0"))
    QGRAPH_ORBIT_CAP: int = int(float(os.getenv("QGRAPH_ORBIT_CAP", "1e6")))

    # Scattering
    QGRAPH_EXCLUSION_FACTOR: float = float(os.getenv("QGRAPH_EXCLUSION_FACTOR", "1e-6"))

    # Spectrum
    QGRAPH_ROOT_TOL: float = float(os.getenv("QGRAPH_ROOT_TOL", "1e-12"))
    QGRAPH_CLUSTER_TOL: float = float(os.getenv("QGRAPH_CLUSTER_TOL", "1e-9"))
    QGRAPH_OVERLAP_MIN: float = float(os.getenv("QGRAPH_OVERLAP_MIN", "0.9"))
    QGRAPH_MAX_REFINEMENTS: int = int(os.getenv("QGRAPH_MAX_REFINEMENTS", "12"))
    QGRAPH_NEGATIVE_SCAN_POINTS: int = int(os.getenv("QGRAPH_NEGATIVE_SCAN_POINTS", "2000"))
    QGRAPH_NEGATIVE_SCAN_MARGIN: float = float(os.getenv("QGRAPH_NEGATIVE_SCAN_MARGIN", "0.05"))
    QGRAPH_POLE_EXCISION: float = float(os.getenv("QGRAPH_POLE_EXCISION", "1e-4"))
    QGRAPH_CONTOUR_RADIUS: float = float(os.getenv("QGRAPH_CONTOUR_RADIUS", "1e-3"))
    QGRAPH_CONTOUR_POINTS: int = int(os.getenv("QGRAPH_CONTOUR_POINTS", "256"))

    # Trace formulae
    QGRAPH_QUADRATURE_TOL: float = float(os.getenv("QGRAPH_QUADRATURE_TOL", "1e-10"))
    QGRAPH_QUADRATURE_CUTOFF: float = float(os.getenv("QGRAPH_QUADRATURE_CUTOFF", "1e-14"))
    QGRAPH_QUADRATURE_MAX_NODES: int = int(float(os.getenv("QGRAPH_QUADRATURE_MAX_NODES", "2e6")))
    QGRAPH_TAIL_TOL: float = float(os.getenv("QGRAPH_TAIL_TOL", "1e-10"))
    QGRAPH_TAIL_MARGIN: float = float(os.getenv("QGRAPH_TAIL_MARGIN", "0.2"))
    QGRAPH_KMAX_LIMIT: float = float(os.getenv("QGRAPH_KMAX_LIMIT", "1e4"))
    QGRAPH_HEAT_T_MIN: float = float(os.getenv("QGRAPH_HEAT_T_MIN", "0.002"))
    QGRAPH_HEAT_T_MAX: float = float(os.getenv("QGRAPH_HEAT_T_MAX", "0.02"))
    QGRAPH_HEAT_POINTS: int = int(os.getenv("QGRAPH_HEAT_POINTS", "16"))

    # Job defaults
    QGRAPH_KMAX: float = float(os.getenv("QGRAPH_KMAX", "50"))
    QGRAPH_NMAX: int = int(os.getenv("QGRAPH_NMAX", "10"))
    QGRAPH_T: float = float(os.getenv("QGRAPH_T", "0.05"))
    QGRAPH_CAUCHY_A: float = float(os.getenv("QGRAPH_CAUCHY_A", "1.0"))

    @property
    def IS_LOCAL(self) -> bool:
        return self.ENVIRONMENT.lower() in ("local", "test", "development")

    def numerics(self) -> Dict[str, Any]:
        """Numerical defaults as a plain dict, echoed into every report."""
        return {
            name: value
            for name, value in self.model_dump().items()
            if name.startswith("QGRAPH_")
        }

    class Config:
        env_file = ".env"
        case_sensitive = True


# Create global settings object
settings = Settings()


def get_settings() -> Settings:
    """
    Return the settings object
    """
    return settings
