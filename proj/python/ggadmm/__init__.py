"""Decentralized consensus optimization simulator (GGADMM family).

Thin wrapper over the C++ core; see the package README for the config file
format and the CLI.
"""

from ggadmm._core import (  # noqa: F401
    DenseDataset,
    GgadmmError,
    LocalObjective,
    QuantizedPayload,
    QuantizerState,
    Topology,
    bandwidth_per_worker,
    build_topology,
    censor_decide,
    deserialize,
    fit_linear_rate,
    generate_path,
    generate_random_bipartite,
    generate_synthetic,
    incidence_set,
    initial_quantizer_state,
    load_csv,
    parse_spec_text,
    partition_uniform,
    payload_bits,
    quantize,
    reconstruct,
    reference_solution,
    run_experiment,
    run_simulation,
    serialize,
    transmission_energy,
)

__all__ = [
    "DenseDataset",
    "GgadmmError",
    "LocalObjective",
    "QuantizedPayload",
    "QuantizerState",
    "Topology",
    "bandwidth_per_worker",
    "build_topology",
    "censor_decide",
    "deserialize",
    "fit_linear_rate",
    "generate_path",
    "generate_random_bipartite",
    "generate_synthetic",
    "incidence_set",
    "initial_quantizer_state",
    "load_csv",
    "parse_spec_text",
    "partition_uniform",
    "payload_bits",
    "quantize",
    "reconstruct",
    "reference_solution",
    "run_experiment",
    "run_simulation",
    "serialize",
    "transmission_energy",
]
