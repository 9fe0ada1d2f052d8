"""Monte Carlo estimate of the long-run average cost of a band policy.

Euler steps ``Z += mu dt + sigma sqrt(dt) xi`` with the control applied at
grid times: impulse bands jump to D (or U) once Z crosses d (or u) and pay
for the actual overshoot; reflecting bands push Z back to [d, u] and pay
per unit pushed.  Holding cost accrues as h(Z) dt at the left endpoint
(trapezoid optional).  Each replication draws from its own SFC64 stream
spawned from the base seed, so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError
from .impulse_solver import BandPolicy
from .model import SIM_CUSTOM, ProblemSpec

CHUNK = 1_000_000
BLOCK = 1024

MODE_IMPULSE, MODE_SINGULAR = 0, 1


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 2e4
    burn_in: float = 100.0
    replications: int = 8
    seed: int = 0
    z0: float | None = None
    trapezoid: bool = False
    dump_path: str | None = None
    stride: int = 100

    def check(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0 (got {self.dt})")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be > 0 (got {self.horizon})")
        if not 0 <= self.burn_in < self.horizon:
            raise DomainError(f"need 0 <= burn_in < horizon (got {self.burn_in}, {self.horizon})")
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError(f"replications must be a positive integer (got {self.replications})")
        if int(self.stride) != self.stride or self.stride < 1:
            raise DomainError(f"stride must be a positive integer (got {self.stride})")
        if self.horizon / self.dt > 1e13:
            raise DomainError("horizon/dt too large")
        return self


@dataclass
class SimResult:
    ac_mean: float
    ac_stderr: float
    n_up: float
    n_down: float
    y1_rate: float
    y2_rate: float
    replications: int
    per_replication: list

    def as_dict(self):
        return {
            "ac_mean": self.ac_mean,
            "ac_stderr": self.ac_stderr,
            "n_up": self.n_up,
            "n_down": self.n_down,
            "y1_rate": self.y1_rate,
            "y2_rate": self.y2_rate,
            "replications": self.replications,
            "per_replication": list(self.per_replication),
        }


@numba.njit(cache=True, inline="always")
def _holding(z, code, p0, p1, p2):
    if code == 0:
        return p0 * (p2 - z) if z < p2 else p1 * (z - p2)
    if code == 1:
        r = z - p1
        return p0 * r * r
    if code == 2:
        return p1 * abs(z - p2) ** p0
    return 0.0


@numba.njit(cache=True)
def _run(rng, n, z, drift, vol, dt, mode, d, D, U, u, K, k, L, ell,
         code, p0, p1, p2, trapezoid, record, zs, cs, cost0):
    """Advance ``n`` steps.  Returns (z, holding, adjust, n_up, n_down, y1, y2).

    With ``record`` set, ``zs[i]``/``cs[i]`` receive the state and running
    cost at the start of step ``i`` (cost excludes holding for custom h).
    """
    hold = 0.0
    adj = 0.0
    n_up = 0
    n_down = 0
    y1 = 0.0
    y2 = 0.0
    h_now = _holding(z, code, p0, p1, p2)
    noise = np.empty(BLOCK)
    start = 0
    while start < n:
        m = min(BLOCK, n - start)
        # drawing a block first keeps the stream order and pipelines better
        for j in range(m):
            noise[j] = rng.standard_normal()
        for j in range(m):
            if record:
                zs[start + j] = z
                cs[start + j] = cost0 + hold + adj
            z_new = z + drift + vol * noise[j]
            if mode == 0:
                if z_new <= d:
                    adj += K + k * (D - z_new)
                    y1 += D - z_new
                    n_up += 1
                    z_new = D
                elif z_new >= u:
                    adj += L + ell * (z_new - U)
                    y2 += z_new - U
                    n_down += 1
                    z_new = U
            else:
                if z_new < d:
                    adj += k * (d - z_new)
                    y1 += d - z_new
                    n_up += 1
                    z_new = d
                elif z_new > u:
                    adj += ell * (z_new - u)
                    y2 += z_new - u
                    n_down += 1
                    z_new = u
            h_next = _holding(z_new, code, p0, p1, p2)
            if trapezoid:
                hold += 0.5 * (h_now + h_next) * dt
            else:
                hold += h_now * dt
            h_now = h_next
            z = z_new
        start += m
    return z, hold, adj, n_up, n_down, y1, y2


def _streams(seed, reps):
    children = np.random.SeedSequence(seed).spawn(reps)
    return [np.random.Generator(np.random.SFC64(c)) for c in children]


def _one_replication(rng, spec, band, cfg, n_burn, n_total, dump):
    hc = spec.holding
    code = hc.sim_code
    p0, p1, p2 = (float(v) for v in hc.sim_params)
    custom = code == SIM_CUSTOM
    mode = MODE_SINGULAR if band.mode == "singular" else MODE_IMPULSE
    dt = cfg.dt
    drift = spec.mu * dt
    vol = math.sqrt(max(spec.sigma2, 0.0) * dt)
    if cfg.z0 is not None:
        z = float(cfg.z0)
    elif mode == MODE_SINGULAR:
        z = 0.5 * (band.d + band.u)
    else:
        z = 0.5 * (band.D + band.U)

    record_any = custom or dump is not None
    zs = np.empty(CHUNK if record_any else 1)
    cs = np.empty_like(zs)
    totals = np.zeros(6)  # hold, adj, n_up, n_down, y1, y2 over the averaging window
    cost_run = 0.0
    step = 0
    rows = []
    while step < n_total:
        # chunk boundaries fall on the burn-in edge
        end = min(n_total, step + CHUNK)
        if step < n_burn < end:
            end = n_burn
        n = end - step
        z, hold, adj, nu, nd, y1, y2 = _run(
            rng, n, z, drift, vol, dt, mode, band.d, band.D, band.U, band.u,
            spec.K, spec.k, spec.L, spec.ell, code, p0, p1, p2,
            cfg.trapezoid, record_any, zs, cs, cost_run)
        if custom:
            hv = hc.h_array(zs[:n]) * dt
            if cfg.trapezoid:
                nxt = np.append(zs[1:n], z)
                hv = 0.5 * (hv + hc.h_array(nxt) * dt)
            hold = math.fsum(hv)
        if dump is not None:
            t = (step + np.arange(n)) * dt
            c = cs[:n].copy()
            if custom:
                c += np.concatenate(([0.0], np.cumsum(hv)[:-1]))
            sel = np.arange((-step) % dump, n, dump)
            rows.append(np.column_stack((t[sel], zs[sel], c[sel])))
        cost_run += hold + adj
        if step >= n_burn:
            totals += (hold, adj, nu, nd, y1, y2)
        step = end
    span = (n_total - n_burn) * dt
    out = {
        "ac": (totals[0] + totals[1]) / span,
        "n_up": totals[2] / span,
        "n_down": totals[3] / span,
        "y1": totals[4] / span,
        "y2": totals[5] / span,
    }
    return out, (np.vstack(rows) if rows else None)


def simulate(spec: ProblemSpec, band: BandPolicy, cfg: SimConfig | None = None) -> SimResult:
    cfg = (cfg or SimConfig()).check()
    if band.mode == "singular":
        if not band.d < band.u:
            raise DomainError(f"reflecting band needs d < u (got {band})")
    elif not band.d < band.D < band.U < band.u:
        raise DomainError(f"impulse band needs d < D < U < u (got {band})")
    if spec.sigma2 < 0:
        raise DomainError("sigma2 must be >= 0 for simulation")
    n_total = int(round(cfg.horizon / cfg.dt))
    n_burn = int(round(cfg.burn_in / cfg.dt))
    reps = int(cfg.replications)

    results = []
    for r, rng in enumerate(_streams(cfg.seed, reps)):
        dump = int(cfg.stride) if (r == 0 and cfg.dump_path) else None
        res, rows = _one_replication(rng, spec, band, cfg, n_burn, n_total, dump)
        results.append(res)
        if rows is not None:
            with open(cfg.dump_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "Z", "cumulative_cost"])
                for row in rows:
                    w.writerow([f"{v:.12g}" for v in row])

    ac = np.array([r["ac"] for r in results])
    stderr = float(ac.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    mean = lambda key: math.fsum(r[key] for r in results) / reps  # noqa: E731
    return SimResult(
        ac_mean=math.fsum(ac) / reps, ac_stderr=stderr,
        n_up=mean("n_up"), n_down=mean("n_down"),
        y1_rate=mean("y1"), y2_rate=mean("y2"),
        replications=reps, per_replication=[float(v) for v in ac],
    )
