"""Python front end for the MIST core."""

import json

from . import _mist
from ._mist import dv_bound, estimate_gaussian_mi, gradient_cases, gradient_check, log_sum_exp, softmax

__all__ = [
    "config",
    "config_hash",
    "dv_bound",
    "estimate_gaussian_mi",
    "generate_dataset",
    "gradient_cases",
    "gradient_check",
    "log_sum_exp",
    "pretrain_heldout_l1",
    "round_trip_ter",
    "selftest",
    "softmax",
    "train_and_evaluate",
]


def config(**blocks):
    """Default run config as a dict, with the given blocks merged in."""
    cfg = json.loads(_mist.default_config())
    for block, values in blocks.items():
        if block not in cfg:
            raise KeyError(f"unknown config block: {block}")
        cfg[block].update(values)
    return cfg


def _dump(cfg):
    return "" if cfg is None else json.dumps(cfg)


def config_hash(cfg=None):
    return _mist.config_hash(_dump(cfg if cfg is not None else config()))


def generate_dataset(out_dir, cfg=None):
    return _mist.generate_dataset(_dump(cfg), str(out_dir))


def round_trip_ter(cfg=None, n=1000, noise_scale=0.0, seed=0):
    return _mist.round_trip_ter(_dump(cfg), n, noise_scale, seed)


def pretrain_heldout_l1(data_dir, cfg=None):
    return _mist.pretrain_heldout_l1(_dump(cfg), str(data_dir))


def train_and_evaluate(data_dir, cfg=None):
    return _mist.train_and_evaluate(_dump(cfg), str(data_dir))


def selftest(fault_op=""):
    return [(name, ok, detail) for name, ok, detail in _mist.selftest(fault_op)]
