"""Time-domain kernel estimation by harmonic probing.

A (possibly black-box) system is driven with sums of complex exponentials
u(t) = sum_i a_i exp(2*pi*j f_i t); once the response settles into a
quasi-steady state, a rectangular-window DFT over an integer number of
drive periods yields exact spectral bins.  Each bin at the intermodulation
frequency m1 f1 + ... + mR fR carries

    n!/(m1! ... mR!) * a1^m1 ... aR^mR * Hn(f1...f1, ..., fR...fR),

with n = m1 + ... + mR, so kernel values follow by dividing out amplitudes
and multinomial weights.  A single complex tone separates orders exactly
(bin k <-> order k); real tones superpose orders on each harmonic, which
an amplitude sweep disentangles.
"""

import json
import math

import numpy as np

from .gfrf import GfrfSample, MeasurementSet
from .system import simulate


class SteadyStateError(RuntimeError):
    pass


class BinCollisionError(ValueError):
    def __init__(self, collisions):
        super().__init__(f"harmonic index collisions: {collisions}")
        self.collisions = collisions


class IllConditionedSweepError(RuntimeError):
    pass


def sawtooth(t, period=2 * np.pi):
    """Rising ramp over [-1, 1] with the given period (value -1 at t = 0)."""
    return 2.0 * np.mod(np.asarray(t) / period, 1.0) - 1.0


def decaying_sawtooth(amplitude, rate):
    """Perturbation a * exp(-rate t) * sawtooth(t) used to steer equilibria."""
    return lambda t: amplitude * np.exp(-rate * np.asarray(t)) * sawtooth(t)


_PERTURBATIONS = {"decaying_sawtooth": decaying_sawtooth}


class Tone:
    def __init__(self, amplitude, freq, kind="complex"):
        if amplitude <= 0:
            raise ValueError("tone amplitude must be positive")
        if kind not in ("complex", "real"):
            raise ValueError("tone kind must be 'complex' or 'real'")
        self.amplitude = float(amplitude)
        self.freq = float(freq)
        self.kind = kind


class ProbePlan:
    """Excitation schedule: tones, settle time, DFT window, and step size.

    The window must hold an integer number of periods of every tone so the
    rectangular-window bins are exact.  An optional additive perturbation
    (decaying, to steer the trajectory toward a particular equilibrium)
    must die out before the analysis window.
    """

    def __init__(self, tones=(), settle_time=50.0, window=1.0, dt=1e-3,
                 perturbation=None, steady_tol=1e-8):
        self.tones = list(tones)
        self.settle_time = float(settle_time)
        self.window = float(window)
        self.dt = float(dt)
        self.perturbation = perturbation
        self.steady_tol = float(steady_tol)
        self.validate()

    def validate(self):
        if self.dt <= 0 or self.window <= 0 or self.settle_time < 0:
            raise ValueError("dt and window must be positive, settle_time >= 0")
        nwin = self.window / self.dt
        if abs(nwin - round(nwin)) > 1e-6:
            raise ValueError("window must be an integer number of steps")
        for tone in self.tones:
            per = tone.freq * self.window
            if abs(per - round(per)) > 1e-6 or round(per) < 1:
                raise ValueError(
                    f"window {self.window} is not an integer number of periods "
                    f"of tone at {tone.freq} Hz")

    def replace(self, **kw):
        d = dict(tones=self.tones, settle_time=self.settle_time,
                 window=self.window, dt=self.dt,
                 perturbation=self.perturbation, steady_tol=self.steady_tol)
        d.update(kw)
        return ProbePlan(**d)

    def input_fn(self):
        tones = self.tones
        pert = self.perturbation

        def u(t):
            t = np.asarray(t, dtype=float)
            total = np.zeros(t.shape, dtype=complex)
            for tone in tones:
                if tone.kind == "complex":
                    total = total + tone.amplitude * np.exp(2j * np.pi * tone.freq * t)
                else:
                    total = total + 2 * tone.amplitude * np.cos(2 * np.pi * tone.freq * t)
            if pert is not None:
                total = total + pert(t)
            return total

        return u

    def to_json(self):
        d = {
            "tones": [{"amplitude": t.amplitude, "freq": t.freq, "kind": t.kind}
                      for t in self.tones],
            "settle_time": self.settle_time,
            "window": self.window,
            "dt": self.dt,
            "steady_tol": self.steady_tol,
        }
        if isinstance(self.perturbation, dict):
            d["perturbation"] = self.perturbation
        return json.dumps(d)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        tones = [Tone(t["amplitude"], t["freq"], t.get("kind", "complex"))
                 for t in d.get("tones", [])]
        pert = d.get("perturbation")
        pert_fn = None
        if pert is not None:
            kind = pert["kind"]
            if kind not in _PERTURBATIONS:
                raise ValueError(f"unknown perturbation kind {kind!r}")
            pert_fn = _PERTURBATIONS[kind](
                *[pert[k] for k in ("amplitude", "rate")])
        plan = cls(tones, d.get("settle_time", 50.0), d.get("window", 1.0),
                   d.get("dt", 1e-3), pert_fn, d.get("steady_tol", 1e-8))
        if pert is not None:
            plan.perturbation_spec = pert
        return plan


class SpectrumEstimate:
    """Indexed quasi-steady spectrum: harmonic multi-index -> complex bin."""

    def __init__(self, base_freqs, bins, dc, energy_time=0.0, energy_freq=0.0):
        self.base_freqs = list(base_freqs)
        self.bins = dict(bins)
        self.dc = float(dc)
        self.energy_time = energy_time
        self.energy_freq = energy_freq

    def parseval_defect(self):
        return abs(self.energy_time - self.energy_freq) / max(self.energy_time, 1e-300)


class ProbeResult:
    """Kernel estimates from one probe run."""

    def __init__(self, dc, samples, spectrum, steady_index):
        self.dc = dc
        self.samples = list(samples)
        self.spectrum = spectrum
        self.steady_index = steady_index

    def by_order(self, order):
        return [s for s in self.samples if s.order == order]


def detect_steady_state(y, period_samples, tol=1e-8):
    """Earliest index where two consecutive period-long windows RMS-agree.

    The relative RMS difference of windows [i, i+p) and [i+p, i+2p) must
    fall below tol.  Raises SteadyStateError for diverging or never-settling
    traces.
    """
    y = np.asarray(y)
    p = int(period_samples)
    N = len(y)
    if p < 1 or N < 2 * p + 1:
        raise ValueError("trace shorter than two candidate windows")
    if not np.all(np.isfinite(y.view(float))):
        raise SteadyStateError("trace contains non-finite samples (divergence)")
    d2 = np.abs(y[p:] - y[:-p]) ** 2          # d2[k] = |y_{k+p} - y_k|^2
    lvl2 = np.abs(y) ** 2
    csum_d = np.concatenate([[0.0], np.cumsum(d2)])
    csum_l = np.concatenate([[0.0], np.cumsum(lvl2)])
    imax = N - 2 * p
    diff = csum_d[p:imax + p + 1] - csum_d[:imax + 1]
    level = np.maximum(csum_l[p:imax + p + 1] - csum_l[:imax + 1], 1e-300)
    ok = diff <= tol * tol * level
    if not np.any(ok):
        raise SteadyStateError(
            f"no steady window found (final relative RMS "
            f"{np.sqrt(diff[-1] / level[-1]):.2e} > tol {tol:.2e})")
    return int(np.argmax(ok))


def _steady_window(sys, plan):
    """Simulate, verify settling, and return the final analysis window."""
    u = plan.input_fn()
    total = plan.settle_time + plan.window
    trace = simulate(sys, u, (0.0, total), dt=plan.dt)
    # the analysis window is an integer number of steps and of every tone
    # period, so it is the natural (exactly commensurate) comparison period
    nwin = int(round(plan.window / plan.dt))
    start = detect_steady_state(trace.y, nwin, tol=plan.steady_tol)
    n_total = len(trace.y) - 1
    if start > n_total - nwin:
        raise SteadyStateError(
            f"steady state reached only at index {start}, after the window "
            f"budget (settle_time={plan.settle_time})")
    w0 = n_total - nwin
    return trace, w0, nwin


def _window_bins(trace, w0, nwin, targets):
    """Exact DFT bins at target frequencies, phased to absolute time."""
    y = trace.y[w0:w0 + nwin]
    dt = trace.dt
    t0 = trace.t[w0]
    wsec = nwin * dt
    # transform around the window mean: identical bins in exact arithmetic,
    # but the large DC component no longer pollutes weak harmonics with
    # roundoff at its own scale
    mean = np.mean(y)
    coeffs = np.fft.fft(y - mean) / nwin
    coeffs[0] += mean
    out = {}
    for f in targets:
        pos = f * wsec
        idx = int(round(pos))
        if abs(pos - idx) > 1e-6:
            raise ValueError(f"target frequency {f} Hz is off the DFT grid")
        val = coeffs[idx % nwin] * np.exp(-2j * np.pi * f * t0)
        out[f] = complex(val)
    energy_time = float(np.mean(np.abs(y) ** 2))
    energy_freq = float(np.sum(np.abs(coeffs) ** 2))
    return out, energy_time, energy_freq


def _index_map(kvec, max_order=3):
    """Multi-indices m (|m|_1 <= max_order) -> bin frequency multiplier."""
    from itertools import product
    R = len(kvec)
    table = {}
    for m in product(range(max_order + 1), repeat=R):
        n = sum(m)
        if 1 <= n <= max_order:
            table[m] = sum(mi * ki for mi, ki in zip(m, kvec))
    return table


def probe_complex_single(sys, a, freq, plan):
    """Estimate H1, H2, H3 on the diagonal (j*w, ...) from one complex tone.

    The drive u(t) = a exp(2*pi*j freq t) maps kernel order k to harmonic
    bin k exactly, so Hk = P(k freq) / a^k; the DC bin is the observable
    equilibrium offset.
    """
    plan = plan.replace(tones=[Tone(a, freq, "complex")])
    trace, w0, nwin = _steady_window(sys, plan)
    targets = [0.0, freq, 2 * freq, 3 * freq]
    bins, e_t, e_f = _window_bins(trace, w0, nwin, targets)
    s = 2j * np.pi * freq
    dc = bins[0.0].real
    samples = [
        GfrfSample(1, (s,), bins[freq] / a),
        GfrfSample(2, (s, s), bins[2 * freq] / a ** 2),
        GfrfSample(3, (s, s, s), bins[3 * freq] / a ** 3),
    ]
    spectrum = SpectrumEstimate([freq], {(k,): bins[k * freq] for k in range(4)},
                                dc, e_t, e_f)
    return ProbeResult(dc, samples, spectrum, w0)


def probe_complex_multi(sys, tones, plan):
    """Off-diagonal kernel samples from simultaneous complex tones.

    All intermodulation bins with total order <= 3 are extracted; the tone
    frequencies must map distinct multi-indices to distinct DFT bins (and
    be commensurate with the window), otherwise BinCollisionError lists
    the clash.
    """
    tones = [t if isinstance(t, Tone) else Tone(t[0], t[1], "complex")
             for t in tones]
    plan = plan.replace(tones=tones)
    wsec = plan.window
    kvec = [int(round(t.freq * wsec)) for t in tones]
    table = _index_map(kvec)
    seen = {}
    collisions = []
    for m, b in table.items():
        if b in seen:
            collisions.append((seen[b], m))
        seen[b] = m
    if any(b == 0 for b in table.values()):
        collisions.append(("dc", [m for m, b in table.items() if b == 0]))
    if collisions:
        raise BinCollisionError(collisions)
    trace, w0, nwin = _steady_window(sys, plan)
    freqs = {m: b / wsec for m, b in table.items()}
    bins, e_t, e_f = _window_bins(trace, w0, nwin,
                                  [0.0] + sorted(set(freqs.values())))
    dc = bins[0.0].real
    samples = []
    spectrum_bins = {}
    for m, f in freqs.items():
        n = sum(m)
        weight = math.factorial(n)
        amp = 1.0
        stuple = []
        for mi, tone in zip(m, tones):
            weight //= math.factorial(mi)
            amp *= tone.amplitude ** mi
            stuple.extend([2j * np.pi * tone.freq] * mi)
        value = bins[f] / (weight * amp)
        spectrum_bins[m] = bins[f]
        samples.append(GfrfSample(n, tuple(stuple), value))
    spectrum = SpectrumEstimate([t.freq for t in tones], spectrum_bins, dc,
                                e_t, e_f)
    return ProbeResult(dc, samples, spectrum, w0)


class SweepResult:
    """Amplitude-sweep kernel separation at one drive frequency."""

    def __init__(self, freq, amplitudes, h1, h3_diag, h2_diag, dc,
                 raw, cond):
        self.freq = freq
        self.amplitudes = list(amplitudes)
        self.h1 = h1
        self.h3_diag = h3_diag
        self.h2_diag = h2_diag
        self.dc = dc
        self.raw = raw
        self.cond = cond


# multinomial weights of the first harmonic / DC superpositions under a
# real tone a e^{jwt} + a e^{-jwt}:  Y1 = a H1 + 3 a^3 H3(-w,w,w) + 10 a^5 H5
# and P0 = dc + 2 a^2 H2(w,-w) + 6 a^4 H4.
_W_FIRST = (1.0, 3.0, 10.0)
_W_DC = (1.0, 2.0, 6.0)


def _scaled_lstsq(V, rhs, cond_limit):
    scale = np.linalg.norm(V, axis=0)
    scale[scale == 0] = 1.0
    Vs = V / scale
    cond = np.linalg.cond(Vs)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedSweepError(
            f"amplitude-sweep Vandermonde ill conditioned (cond={cond:.2e}); "
            "use smaller or better-spread amplitudes")
    q, r = np.linalg.qr(Vs)
    sol = np.linalg.solve(r, q.conj().T @ rhs)
    return sol / scale, cond


def probe_real_amplitude_sweep(sys, freq, amplitudes, plan, degree=3,
                               cond_limit=1e12):
    """Kernel separation by sweeping the amplitude of one real tone.

    Drives u(t) = 2 a cos(2 pi freq t) for each amplitude a, reads the
    fundamental, 2nd-harmonic and DC bins, and fits the truncated odd/even
    power series in a (degree-3 truncation keeps H1 and the diagonal H3
    term).  Per-amplitude raw estimates P(f)/a, P(2f)/a^2, P(0) are kept
    in .raw for error-ladder diagnostics.
    """
    amplitudes = [float(a) for a in amplitudes]
    if len(amplitudes) < 1 or min(amplitudes) <= 0:
        raise ValueError("need positive sweep amplitudes")
    n_odd = max(1, (degree + 1) // 2)     # unknowns in the fundamental fit
    n_odd = min(n_odd, len(amplitudes), len(_W_FIRST))
    n_even = min(n_odd, len(amplitudes), len(_W_DC))
    y1 = np.empty(len(amplitudes), dtype=complex)
    y2 = np.empty(len(amplitudes), dtype=complex)
    y0 = np.empty(len(amplitudes))
    raw = {}
    for i, a in enumerate(amplitudes):
        p = plan.replace(tones=[Tone(a, freq, "real")])
        trace, w0, nwin = _steady_window(sys, p)
        bins, _, _ = _window_bins(trace, w0, nwin, [0.0, freq, 2 * freq])
        y1[i] = bins[freq]
        y2[i] = bins[2 * freq]
        y0[i] = bins[0.0].real
        raw[a] = {
            "h1": bins[freq] / a,
            "h2": bins[2 * freq] / a ** 2,
            "dc": bins[0.0].real,
        }
    a2 = np.asarray(amplitudes) ** 2
    V1 = np.vander(a2, N=n_odd, increasing=True) * np.asarray(_W_FIRST[:n_odd])
    c1, cond = _scaled_lstsq(V1, y1 / np.asarray(amplitudes), cond_limit)
    V0 = np.vander(a2, N=n_even, increasing=True) * np.asarray(_W_DC[:n_even])
    c0, _ = _scaled_lstsq(V0, y0.astype(complex), cond_limit)
    V2 = np.vander(a2, N=min(n_even, len(amplitudes)), increasing=True)
    c2, _ = _scaled_lstsq(V2, y2 / a2, cond_limit)
    h1 = complex(c1[0])
    h3_diag = complex(c1[1]) if n_odd > 1 else None
    dc = float(c0[0].real)
    h2_diag = complex(c2[0])
    return SweepResult(freq, amplitudes, h1, h3_diag, h2_diag, dc, raw, cond)


def merge_probe_results(results, dc=None):
    """Collect ProbeResults into a MeasurementSet, deduplicating tuples."""
    groups = {1: {}, 2: {}, 3: {}}
    dcs = []
    for res in results:
        dcs.append(res.dc)
        for smp in res.samples:
            groups[smp.order].setdefault(smp.sorted_key(), smp)
    if dc is None:
        dc = float(np.mean(dcs)) if dcs else 0.0
    return MeasurementSet(list(groups[1].values()), list(groups[2].values()),
                          list(groups[3].values()), dc=dc)
