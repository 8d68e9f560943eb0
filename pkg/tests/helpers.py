"""Random instances on a unit scale: W=1, P_max=1 and an SNR denominator of 1,
so each user's k equals its uplink gain and C equals its downlink gain."""
import numpy as np

from fdwpcn.model import SystemParams, UserParams


def unit_sys(**kw):
    base = dict(p_h=1.0, p_max=1.0, bandwidth=1.0, noise_psd=1.0, beta=0.0)
    base.update(kw)
    return SystemParams(**base)


def random_users(rng, n, battery=True):
    users = []
    for i in range(n):
        k = 10 ** rng.uniform(-1, 2)
        c = 10 ** rng.uniform(-1.5, 0.3)
        b = rng.uniform(0, 0.5) if battery and rng.random() < 0.5 else 0.0
        users.append(UserParams(i + 1, g=k, h=c, battery=b))
    return users
