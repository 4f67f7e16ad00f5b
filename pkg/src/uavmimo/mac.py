"""RSRP association and cyclic round-robin scheduling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from .channel import LargeScaleState


def compute_rsrp(ls: LargeScaleState, tx_power_dbm: float, beam_gain_db=None) -> np.ndarray:
    """RSRP (dBm) per (BS, user) from the slow gain only.

    ``beam_gain_db`` adds the fixed analog array-factor gain for the
    single-user panel; leave it ``None`` in multi-user mode, where the
    control channels are beamformed and association follows the element
    gain alone.
    """
    rsrp = tx_power_dbm + ls.slow_gain_db
    if beam_gain_db is not None:
        rsrp = rsrp + beam_gain_db
    return rsrp


@dataclass
class AssociationMap:
    serving_bs: np.ndarray  # (n_users,)
    rsrp: np.ndarray        # (n_bs, n_users) dBm

    def users_of(self, bs: int) -> np.ndarray:
        return np.flatnonzero(self.serving_bs == bs)

    def load(self, n_bs: Optional[int] = None) -> np.ndarray:
        n_bs = self.rsrp.shape[0] if n_bs is None else n_bs
        return np.bincount(self.serving_bs, minlength=n_bs)


def associate(rsrp) -> AssociationMap:
    """Max-RSRP association; ties go to the lowest BS id."""
    rsrp = np.asarray(rsrp, dtype=float)
    if rsrp.ndim == 1:
        rsrp = rsrp[:, None]
    return AssociationMap(serving_bs=np.argmax(rsrp, axis=0), rsrp=rsrp)


@dataclass
class Schedule:
    """Cyclic round-robin over the users of every BS.

    PRB instances are enumerated slot-major (``index = slot * prbs + prb``);
    instance ``i`` of BS ``b`` takes the ``k_b = min(k_max, n_b)`` users that
    follow, in cyclic order, the ones served on instance ``i - 1``.
    """

    order: List[np.ndarray]  # per-BS user ids in cycling order
    prbs: int
    k_max: int

    @property
    def n_bs(self) -> int:
        return len(self.order)

    def n_users(self, bs: int) -> int:
        return len(self.order[bs])

    def k(self, bs: int) -> int:
        return min(self.k_max, self.n_users(bs))

    def served(self, bs: int, slot: int, prb: int) -> np.ndarray:
        n = self.n_users(bs)
        if n == 0:
            return np.empty(0, dtype=int)
        k = self.k(bs)
        start = ((slot * self.prbs + prb) * k) % n
        return self.order[bs][(start + np.arange(k)) % n]

    def served_sets(self, instance: int) -> List[np.ndarray]:
        slot, prb = divmod(instance, self.prbs)
        return [self.served(b, slot, prb) for b in range(self.n_bs)]

    def prb_share(self) -> np.ndarray:
        """Long-run scheduled PRBs per slot for every user, ``prbs k_b / n_b``."""
        n_users = sum(len(o) for o in self.order)
        share = np.zeros(n_users)
        for b, o in enumerate(self.order):
            if len(o):
                share[o] = self.prbs * self.k(b) / len(o)
        return share

    def instances_to_cover(self) -> int:
        """PRB instances needed before every associated user is served once."""
        need = [int(np.ceil(len(o) / self.k(b))) for b, o in enumerate(self.order) if len(o)]
        return max(need, default=1)

    def iter_instances(self, count: int) -> Iterator[List[np.ndarray]]:
        for i in range(count):
            yield self.served_sets(i)


def schedule_round_robin(assoc: AssociationMap, prbs: int, k_max: int,
                         rng: Optional[np.random.Generator] = None,
                         n_bs: Optional[int] = None) -> Schedule:
    """Build the cyclic schedule. Users of a BS cycle in id order, or in a
    random order when ``rng`` is given."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if prbs < 1:
        raise ValueError("prbs must be at least 1")
    n_bs = assoc.rsrp.shape[0] if n_bs is None else n_bs
    order = []
    for b in range(n_bs):
        users = np.flatnonzero(assoc.serving_bs == b)
        if rng is not None:
            users = rng.permutation(users)
        order.append(users)
    return Schedule(order=order, prbs=prbs, k_max=k_max)
