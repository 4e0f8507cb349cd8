"""Mean-field particle systems, their McKean-Vlasov limits, and L^eta transport."""

from ._core import (
    ConfigError,
    FlowTable,
    InitSpec,
    IoError,
    KernelError,
    KernelSpec,
    Kind,
    SimConfig,
    SimError,
    TransportError,
    __version__,
    brownian_increment,
    brute_force_wasserstein,
    check_assumptions,
    derive_seed,
    deterministic_flow,
    dual_lower_bound,
    eta_cost,
    exact_wasserstein_eta,
    fit_rate,
    make_builtin,
    run_decoupled,
    run_coupled_pair,
    run_from_config,
    run_interacting,
    run_limit_copies,
    set_worker_count,
    sinkhorn_wasserstein_eta,
    solve_meanfield_flow,
    transport_selftest,
    worker_count,
)

__all__ = [
    "ConfigError",
    "FlowTable",
    "InitSpec",
    "IoError",
    "KernelError",
    "KernelSpec",
    "Kind",
    "SimConfig",
    "SimError",
    "TransportError",
    "__version__",
    "brownian_increment",
    "brute_force_wasserstein",
    "check_assumptions",
    "derive_seed",
    "deterministic_flow",
    "dual_lower_bound",
    "eta_cost",
    "exact_wasserstein_eta",
    "fit_rate",
    "make_builtin",
    "run_decoupled",
    "run_coupled_pair",
    "run_from_config",
    "run_interacting",
    "run_limit_copies",
    "set_worker_count",
    "sinkhorn_wasserstein_eta",
    "solve_meanfield_flow",
    "transport_selftest",
    "worker_count",
]
