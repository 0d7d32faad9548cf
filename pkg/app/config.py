from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional


class Settings(BaseSettings):
    """
    Laboratory settings loaded from environment variables (prefix DELOC_)
    """
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="DELOC_",
        case_sensitive=False,
        extra="ignore"
    )

    # Application
    app_name: str = "deloc-lab"
    app_version: str = "0.1.0"
    debug: bool = False
    log_file: Optional[str] = None
    threads: int = 1
    output_dir: str = "./out"

    # Linear algebra tolerances
    residual_tol: float = 1e-8          # eigenpair residual, relative to 1 + ||A||
    unit_norm_tol: float = 1e-10
    orthonormal_tol: float = 1e-10
    rank_tol: float = 1e-10
    nsm_rel_tol: float = 1e-8           # negative second moment identity
    embedding_tol: float = 1e-12

    # Fourier inversion / characteristic functions
    density_norm_tol: float = 1e-3
    fourier_tail_tol: float = 1e-6
    fourier_max_window: float = 2e4
    superlevel_step: float = 1e-3
    levy_max_centers: int = 4000         # multi-dimensional Levy estimator

    # Graph tolerances
    braess_tie_tol: float = 1e-10
    nodal_zero_tol: float = 1e-12
    multiplicity_tol: float = 1e-8
    laplacian_psd_tol: float = 1e-10

    # Absolute constants the theory leaves unspecified
    c0: float = 3.0                     # fixed-vector small ball
    c_audit: float = 3.0                # G(n,p) property audit
    braess_c1: float = 1.0
    braess_c2: float = 0.5
    boundedness_m: float = 3.0
    deloc_s: float = 0.5                # delta = (eps * s)^6
    halasz_c: float = 10.0
    projection_c: float = 2.0
    tensorization_m_min: float = 4.0
    statistical_sigmas: float = 3.0

    # Desk-scale guards
    eps_net_max_k: int = 12
    eps_net_pool: int = 20000
    eps_net_shrink: float = 0.85
    braess_exact_max_n: int = 150
    mc_block_size: int = 4096
    projection_bins_h: float = 0.1


# Global settings instance
settings = Settings()
