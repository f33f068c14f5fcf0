"""JSON model files and solve reports.

A model file holds ``num_states``, ``num_actions``, ``gamma``, ``reward``
(S x A), ``kernel`` (S x A x S) and optionally ``mu`` (length S) and
``uncertainty`` (``rect``, ``p``, ``alpha``, ``beta``).  Unknown keys are
rejected.  The max-norm is written as the string ``"inf"``.  Floats are
written with Python's shortest round-trip representation, so a
load/dump cycle preserves every value bit for bit.
"""
import json
import math

import numpy as np

from robustmdp.errors import RobustMDPError
from robustmdp.mdp import Mdp
from robustmdp.robust_bellman import Rect, UncertaintySpec

REQUIRED_KEYS = ("num_states", "num_actions", "gamma", "reward", "kernel")
OPTIONAL_KEYS = ("mu", "uncertainty")
UNCERTAINTY_KEYS = ("rect", "p", "alpha", "beta")


class MdpFileError(RobustMDPError, ValueError):
    pass


def encode_norm(p):
    return "inf" if math.isinf(p) else p


def _array(doc, key, shape):
    try:
        arr = np.array(doc[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MdpFileError(f"{key!r} is not a numeric array: {exc}") from None
    if arr.shape != shape:
        raise MdpFileError(f"{key!r} has shape {arr.shape}, expected {shape}")
    return arr


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise MdpFileError(f"{where} must be an object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise MdpFileError(f"unknown keys in {where}: {', '.join(unknown)}")


def parse_document(doc):
    """Build ``(Mdp, UncertaintySpec)`` from a decoded JSON object.

    Structural problems raise ``MdpFileError``; numeric invariants (row
    sums, discount range) are left to ``validate_mdp``.
    """
    _check_keys(doc, REQUIRED_KEYS + OPTIONAL_KEYS, "model file")
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise MdpFileError(f"missing keys: {', '.join(missing)}")
    S, A = doc["num_states"], doc["num_actions"]
    if not (isinstance(S, int) and isinstance(A, int) and S >= 1 and A >= 1):
        raise MdpFileError("num_states and num_actions must be positive integers")
    try:
        gamma = float(doc["gamma"])
    except (TypeError, ValueError):
        raise MdpFileError("gamma must be a number") from None
    reward = _array(doc, "reward", (S, A))
    kernel = _array(doc, "kernel", (S, A, S))
    mu = _array(doc, "mu", (S,)) if "mu" in doc else None
    m = Mdp(kernel, reward, gamma, mu)

    unc = doc.get("uncertainty")
    if unc is None:
        return m, UncertaintySpec.none()
    _check_keys(unc, UNCERTAINTY_KEYS, "uncertainty")
    try:
        rect = Rect(unc.get("rect", "none"))
    except ValueError:
        raise MdpFileError(f"unknown rect {unc.get('rect')!r}") from None
    if rect is Rect.NONE:
        return m, UncertaintySpec.none()
    shape = (S, A) if rect is Rect.SA else (S,)
    try:
        u = UncertaintySpec(rect, unc.get("p", 2.0), _array(unc, "alpha", shape), _array(unc, "beta", shape))
    except KeyError as exc:
        raise MdpFileError(f"uncertainty is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise MdpFileError(str(exc)) from None
    return m, u


def to_document(m, u=None):
    doc = {
        "num_states": m.num_states,
        "num_actions": m.num_actions,
        "gamma": m.gamma,
        "reward": m.reward.tolist(),
        "kernel": m.kernel.tolist(),
        "mu": m.mu.tolist(),
    }
    if u is not None and u.rect is not Rect.NONE:
        doc["uncertainty"] = {
            "rect": u.rect.value,
            "p": encode_norm(u.p),
            "alpha": u.alpha.tolist(),
            "beta": u.beta.tolist(),
        }
    elif u is not None:
        doc["uncertainty"] = {"rect": "none"}
    return doc


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MdpFileError(f"not valid JSON: {exc}") from None
    return parse_document(doc)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(m, u=None):
    return json.dumps(to_document(m, u), indent=1, allow_nan=False) + "\n"


def dump(path, m, u=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(m, u))


def solve_report(result, m, u, target_eps):
    """Deterministic JSON-ready summary of a solve (no timings)."""
    return {
        "rect": u.rect.value,
        "p": encode_norm(u.p) if u.rect is not Rect.NONE else None,
        "gamma": m.gamma,
        "target_eps": target_eps,
        "converged": result.converged,
        "sweeps": result.sweeps,
        "final_residual": result.final_residual,
        "value": result.value.tolist(),
        "policy": result.policy.probs.tolist(),
        "chi": result.chi.tolist(),
    }
