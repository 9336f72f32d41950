"""Shape functions, atom-generated spaces and Gaussian embedding diagnostics."""

import json
from pathlib import Path

from . import _core
from ._core import (
    AtomSet,
    ConfigError,
    GaugeEngine,
    GaussianSpace,
    GridFunction,
    SequenceSpace,
    ShapeFunction,
    WienerSpace,
    bridge_refine,
    build_atoms,
    check_shape,
    config_schema,
    containment_witnesses,
    cs_bound_check,
    dichotomy_sweep,
    eval_shape,
    full_measure_mc,
    gauge,
    greedy_net,
    h12_norm,
    holder_norm,
    list_builtins,
    modulus_of_continuity,
    normalize_config,
    parse_shape,
    refine,
    sample_kl,
    sample_wiener,
    set_worker_count,
    sha256_hex,
    small_ball_holder_bound,
    small_holder_defect,
    small_holder_membership,
    sup_norm,
    validate_config,
    vertex_enumeration_gauge,
    worker_count,
)

__version__ = _core.__version__


def load_config(path):
    """Read a JSON config file."""
    return json.loads(Path(path).read_text())


def run_config(config, out_dir):
    """Run every check of a config (dict or path); returns the manifest dict."""
    if not isinstance(config, dict):
        config = load_config(config)
    return _core.run_config(config, str(out_dir))
