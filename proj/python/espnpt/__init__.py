"""Ewald summation with prolate spheroidal wave functions, plus an NPT integrator."""

import json

import numpy as np

from . import _core
from ._core import EspError, InputError, ParameterError, eval_psi0, pswf_info, read_particles, set_num_threads
from ._core import solve_bandwidth, toy_system

__all__ = [
    "EspError", "InputError", "ParameterError", "classical_ewald", "compute", "direct_ksum", "eval_psi0",
    "pswf_info", "read_particles", "set_num_threads", "simulate", "solve_bandwidth", "toy_system", "tune", "verify",
]


def _arrays(positions, charges, cell):
    pos = np.ascontiguousarray(positions, dtype=float).reshape(-1, 3)
    q = np.ascontiguousarray(charges, dtype=float).reshape(-1)
    h = np.asarray(cell, dtype=float)
    if h.shape == (3,):
        h = h.reshape(3, 1)
    return pos, q, h


def compute(positions, charges, cell, local_pressure=False, **config):
    """Energy, forces and pressure tensors. cell is (Lx, Ly, Lz) or a 3x3 matrix of column vectors."""
    return _core.compute(*_arrays(positions, charges, cell), json.dumps(config), local_pressure)


def direct_ksum(positions, charges, cell, **config):
    """Far field by the exact structure-factor sum."""
    return _core.direct_ksum(*_arrays(positions, charges, cell), json.dumps(config))


def classical_ewald(positions, charges, cell, tol=1e-13):
    """Full Coulomb energy, forces and pressure by classical Ewald summation."""
    return _core.classical_ewald(*_arrays(positions, charges, cell), tol)


def verify(positions, charges, cell, **config):
    """Run the oracle suite; returns one report dict per quantity."""
    return _core.verify(*_arrays(positions, charges, cell), json.dumps(config))


def tune(quantity, target, r_c=0.0, calibration=""):
    """Map a target error to (delta, P, spacing)."""
    return _core.tune(quantity, target, r_c, calibration)


def simulate(positions, charges, cell, masses=None, **config):
    """NPT run. Dotted keys such as npt.n_steps go in as npt_n_steps or via a dict."""
    flat = {}
    for k, v in config.items():
        if isinstance(v, dict):
            flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            flat[k.replace("npt_", "npt.", 1) if k.startswith("npt_") else k] = v
    m = None if masses is None else [float(x) for x in np.asarray(masses).reshape(-1)]
    return _core.simulate(*_arrays(positions, charges, cell), m, json.dumps(flat))
