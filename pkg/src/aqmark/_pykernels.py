"""Pure-Python per-packet kernels.

This module mirrors ``_kernels.pyx`` line for line. Both take the same
arguments and perform the same floating point operations in the same order,
so a simulation produces identical output whichever backend is loaded.
Random draws are made by the caller and passed in as ``u``.
"""
from math import exp


class TokenBucket:
    """Token bucket with lazy refill and a per-arrival EWMA of its fill level.

    Rates are in bits/second, sizes in bytes.
    """

    def __init__(self, cir, burst, ewma_weight=0.002, tokens=-1.0, now=0.0):
        if cir <= 0 or burst <= 0:
            raise ValueError("cir and burst must be positive")
        if not 0.0 < ewma_weight <= 1.0:
            raise ValueError("ewma_weight must be in (0, 1]")
        self.cir = float(cir)
        self.burst = float(burst)
        self.ewma_weight = float(ewma_weight)
        self.tokens = self.burst if tokens < 0 else min(float(tokens), self.burst)
        self.avg_tokens = self.tokens
        self.last_refill = float(now)
        self.consumed = 0.0

    def refill(self, now):
        dt = now - self.last_refill
        if dt < 0:
            raise ValueError(
                "time regression: refill at %r after %r" % (now, self.last_refill))
        if dt > 0:
            t = self.tokens + self.cir * dt / 8.0
            self.tokens = t if t < self.burst else self.burst
            self.last_refill = now
        return self.tokens

    def try_consume(self, size):
        if size <= 0:
            raise ValueError("packet size must be positive, got %r" % (size,))
        if self.tokens >= size:
            self.tokens -= size
            self.consumed += size
            return True
        return False

    def update_avg(self):
        w = self.ewma_weight
        self.avg_tokens = (1.0 - w) * self.avg_tokens + w * self.tokens
        return self.avg_tokens


def pam_probability(x, min_th, max_th, p_max, p_min):
    if x < min_th:
        return 1.0
    if x < max_th:
        return (p_max - p_min) / (max_th - min_th) * (max_th - x)
    return 0.0


def red_drop_prob(avg, min_th, max_th, max_p):
    if avg < min_th:
        return 0.0
    if avg < max_th:
        return max_p * (avg - min_th) / (max_th - min_th)
    return 1.0


class RateEstimator:
    """Exponentially averaged rate with interarrival-dependent weight e^(-T/K)."""

    def __init__(self, k):
        if k <= 0:
            raise ValueError("averaging constant must be positive")
        self.k = float(k)
        self.rate = 0.0
        self.last_arrival = 0.0
        self.started = False

    def update(self, bits, now):
        if not self.started:
            self.started = True
            self.rate = bits / self.k
        else:
            t = now - self.last_arrival
            if t > 0:
                w = exp(-t / self.k)
                self.rate = (1.0 - w) * (bits / t) + w * self.rate
            else:
                # limit of the blend as T -> 0
                self.rate = self.rate + bits / self.k
        self.last_arrival = now
        return self.rate


class FairRate:
    """Aggregate arrival / allocation estimates and the fair share alpha."""

    def __init__(self, capacity, k_est=0.1, k_c=0.2, clamp=2.0, now=0.0):
        if capacity <= 0 or k_est <= 0 or k_c <= 0 or clamp < 1.0:
            raise ValueError("invalid fair-rate parameters")
        self.capacity = float(capacity)
        self.k_est = float(k_est)
        self.k_c = float(k_c)
        self.clamp = float(clamp)
        self.alpha = self.capacity
        self.a_hat = 0.0
        self.r_hat = 0.0
        self.congested = False
        self.window_start = float(now)
        self.max_rate_seen = 0.0
        self.last_arrival = 0.0
        self.started = False
        self.updates = 0

    def tick(self, now):
        if now - self.window_start >= self.k_c:
            self.update_alpha(now)
        return self.alpha

    def update_alpha(self, now):
        alpha = self.alpha
        self.congested = self.a_hat >= self.capacity
        if self.congested:
            if self.r_hat > 0:
                new = alpha * self.capacity / self.r_hat
                lo = alpha / self.clamp
                hi = alpha * self.clamp
                if new < lo:
                    new = lo
                elif new > hi:
                    new = hi
                self.alpha = new
        elif self.max_rate_seen > 0:
            self.alpha = self.max_rate_seen
        self.max_rate_seen = 0.0
        self.window_start = now
        self.updates += 1
        return self.alpha

    def on_arrival(self, bits, stamped_rate, allocated, now):
        acc = bits if allocated else 0.0
        if not self.started:
            self.started = True
            self.a_hat = bits / self.k_est
            self.r_hat = acc / self.k_est
        else:
            t = now - self.last_arrival
            if t > 0:
                w = exp(-t / self.k_est)
                self.a_hat = (1.0 - w) * (bits / t) + w * self.a_hat
                self.r_hat = (1.0 - w) * (acc / t) + w * self.r_hat
            else:
                self.a_hat = self.a_hat + bits / self.k_est
                self.r_hat = self.r_hat + acc / self.k_est
        self.last_arrival = now
        if stamped_rate > self.max_rate_seen:
            self.max_rate_seen = stamped_rate


class TimeSlidingWindow:
    """Time-sliding-window rate meter of the two-color TSW marker."""

    def __init__(self, target_rate, win_length=1.0, now=0.0):
        if target_rate <= 0 or win_length <= 0:
            raise ValueError("target_rate and win_length must be positive")
        self.target_rate = float(target_rate)
        self.win_length = float(win_length)
        self.avg_rate = self.target_rate
        self.t_front = float(now)

    def update(self, bits, now):
        self.avg_rate = (self.avg_rate * self.win_length + bits) / (
            now - self.t_front + self.win_length)
        self.t_front = now
        return self.avg_rate

    def out_probability(self):
        if self.avg_rate <= self.target_rate:
            return 0.0
        return (self.avg_rate - self.target_rate) / self.avg_rate


class RedAverage:
    """RIO's two queue averages with RED's idle-period decay.

    ``pkt_time`` is the transmission time of a typical packet; an idle
    period of length d decays both averages as if d / pkt_time empty-queue
    arrivals had been seen.
    """

    def __init__(self, weight, pkt_time):
        if not 0.0 < weight <= 1.0:
            raise ValueError("ewma weight must be in (0, 1]")
        self.weight = float(weight)
        self.pkt_time = float(pkt_time)
        self.avg_total = 0.0
        self.avg_in = 0.0
        self.idle = True
        self.idle_since = 0.0

    def arrive(self, q_total, q_in, now):
        w = self.weight
        if self.idle:
            self.idle = False
            m = (now - self.idle_since) / self.pkt_time
            if m > 0:
                decay = (1.0 - w) ** m
                self.avg_total *= decay
                self.avg_in *= decay
        self.avg_total = (1.0 - w) * self.avg_total + w * q_total
        self.avg_in = (1.0 - w) * self.avg_in + w * q_in

    def go_idle(self, now):
        self.idle = True
        self.idle_since = now
