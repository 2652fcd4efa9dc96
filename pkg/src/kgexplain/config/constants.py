"""
Constants and default values for the evidence-selection engine.
"""
from typing import Dict

# Hyperparameter defaults (kept identical across datasets)
DEFAULT_LAMBDA_STRUCT = 0.27
DEFAULT_LAMBDA_SEM = 0.31
DEFAULT_LAMBDA_PREF = 0.42
DEFAULT_PENALTY = 1.0       # weight of the inverse-degree term
DEFAULT_SMOOTHING = 1.0     # cluster-count smoothing; must stay >= 1
DEFAULT_TAU = 0.40
DEFAULT_GAMMA = 0.6
DEFAULT_TOP_N = 5
DEFAULT_MAX_HOPS = 3
DEFAULT_CANDIDATE_CAP = 512
DEFAULT_INTENT_TEMPERATURE = 0.1
DEFAULT_LAYERS = 3
DEFAULT_CLUSTERS = 3
DEFAULT_HISTORY_LENGTH = 10

# Embedding defaults
DEFAULT_DIM = 64
DEFAULT_SEED = 13
KMEANS_MAX_ITER = 100
ZERO_NORM = 1e-12

# Generation defaults
DEFAULT_MAX_TOKENS = 128
DEFAULT_GEN_TEMPERATURE = 0.0
DEFAULT_HTTP_TIMEOUT = 30.0
DEFAULT_MAX_IN_FLIGHT = 4

EMBEDDING_BACKENDS = ("hash", "file", "http")
GENERATION_BACKENDS = ("stub", "http")
RETRIEVAL_STRATEGIES = ("preference", "flat")

# Index snapshot format
INDEX_MAGIC = "KGEXPLAIN-INDEX"
INDEX_FORMAT_VERSION = 1

# Environment variable names for endpoints and credentials
ENV_ENCODER_URL = "KGEXPLAIN_ENCODER_URL"
ENV_COMPLETION_URL = "KGEXPLAIN_COMPLETION_URL"
ENV_API_TOKEN = "KGEXPLAIN_API_TOKEN"

# Ablation switches. Each one disables a single stage of the pipeline.
ABLATION_FLAGS: Dict[str, str] = {
    "no_kg": "Generate from history and target only (no evidence block)",
    "no_pruning": "Score paths by relevance alone and skip MMR",
    "no_spec": "Treat every node as maximally specific (specificity fixed at 1)",
    "no_mmr": "Plain top-N selection (gamma = 1)",
    "only_1hop": "Restrict enumeration to 1-hop attribute edges",
}


def is_ablation_enabled(ablations, flag_name: str) -> bool:
    """
    Check whether an ablation switch is on.

    Args:
        ablations: Object with one boolean attribute per ablation flag
        flag_name: Name of the flag (a key of ABLATION_FLAGS)

    Returns:
        bool: True if the ablation is active

    Raises:
        KeyError: If the flag name is not registered
    """
    if flag_name not in ABLATION_FLAGS:
        raise KeyError(f"Unknown ablation flag: {flag_name}")
    return bool(getattr(ablations, flag_name, False))


# Run artifact file names
class ArtifactNames:
    RETRIEVAL = "retrieval.jsonl"
    EXPLANATION = "explanation.txt"
    PROVENANCE = "provenance.json"
    PROMPT = "prompt.txt"
    REPORT = "eval_report.json"
    TAU_SWEEP = "tau_sweep.csv"
    SWEEP = "sweep.csv"
