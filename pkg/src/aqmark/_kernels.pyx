# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled per-packet kernels.

Same interface and same floating point operation order as _pykernels.py.
"""
from libc.math cimport exp, pow


cdef class TokenBucket:
    cdef public double cir
    cdef public double burst
    cdef public double ewma_weight
    cdef public double tokens
    cdef public double avg_tokens
    cdef public double last_refill
    cdef public double consumed

    def __init__(self, double cir, double burst, double ewma_weight=0.002,
                 double tokens=-1.0, double now=0.0):
        if cir <= 0 or burst <= 0:
            raise ValueError("cir and burst must be positive")
        if not 0.0 < ewma_weight <= 1.0:
            raise ValueError("ewma_weight must be in (0, 1]")
        self.cir = cir
        self.burst = burst
        self.ewma_weight = ewma_weight
        self.tokens = burst if tokens < 0 else min(tokens, burst)
        self.avg_tokens = self.tokens
        self.last_refill = now
        self.consumed = 0.0

    cpdef double refill(self, double now) except? -1.0:
        cdef double dt = now - self.last_refill
        cdef double t
        if dt < 0:
            raise ValueError(
                "time regression: refill at %r after %r" % (now, self.last_refill))
        if dt > 0:
            t = self.tokens + self.cir * dt / 8.0
            self.tokens = t if t < self.burst else self.burst
            self.last_refill = now
        return self.tokens

    cpdef bint try_consume(self, double size) except -1:
        if size <= 0:
            raise ValueError("packet size must be positive, got %r" % (size,))
        if self.tokens >= size:
            self.tokens -= size
            self.consumed += size
            return True
        return False

    cpdef double update_avg(self):
        cdef double w = self.ewma_weight
        self.avg_tokens = (1.0 - w) * self.avg_tokens + w * self.tokens
        return self.avg_tokens


cpdef double pam_probability(double x, double min_th, double max_th,
                             double p_max, double p_min):
    if x < min_th:
        return 1.0
    if x < max_th:
        return (p_max - p_min) / (max_th - min_th) * (max_th - x)
    return 0.0


cpdef double red_drop_prob(double avg, double min_th, double max_th, double max_p):
    if avg < min_th:
        return 0.0
    if avg < max_th:
        return max_p * (avg - min_th) / (max_th - min_th)
    return 1.0


cdef class RateEstimator:
    cdef public double k
    cdef public double rate
    cdef public double last_arrival
    cdef public bint started

    def __init__(self, double k):
        if k <= 0:
            raise ValueError("averaging constant must be positive")
        self.k = k
        self.rate = 0.0
        self.last_arrival = 0.0
        self.started = False

    cpdef double update(self, double bits, double now):
        cdef double t, w
        if not self.started:
            self.started = True
            self.rate = bits / self.k
        else:
            t = now - self.last_arrival
            if t > 0:
                w = exp(-t / self.k)
                self.rate = (1.0 - w) * (bits / t) + w * self.rate
            else:
                self.rate = self.rate + bits / self.k
        self.last_arrival = now
        return self.rate


cdef class FairRate:
    cdef public double capacity
    cdef public double k_est
    cdef public double k_c
    cdef public double clamp
    cdef public double alpha
    cdef public double a_hat
    cdef public double r_hat
    cdef public bint congested
    cdef public double window_start
    cdef public double max_rate_seen
    cdef public double last_arrival
    cdef public bint started
    cdef public long updates

    def __init__(self, double capacity, double k_est=0.1, double k_c=0.2,
                 double clamp=2.0, double now=0.0):
        if capacity <= 0 or k_est <= 0 or k_c <= 0 or clamp < 1.0:
            raise ValueError("invalid fair-rate parameters")
        self.capacity = capacity
        self.k_est = k_est
        self.k_c = k_c
        self.clamp = clamp
        self.alpha = capacity
        self.a_hat = 0.0
        self.r_hat = 0.0
        self.congested = False
        self.window_start = now
        self.max_rate_seen = 0.0
        self.last_arrival = 0.0
        self.started = False
        self.updates = 0

    cpdef double tick(self, double now):
        if now - self.window_start >= self.k_c:
            self.update_alpha(now)
        return self.alpha

    cpdef double update_alpha(self, double now):
        cdef double alpha = self.alpha
        cdef double new, lo, hi
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

    cpdef on_arrival(self, double bits, double stamped_rate, bint allocated,
                     double now):
        cdef double acc = bits if allocated else 0.0
        cdef double t, w
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


cdef class TimeSlidingWindow:
    cdef public double target_rate
    cdef public double win_length
    cdef public double avg_rate
    cdef public double t_front

    def __init__(self, double target_rate, double win_length=1.0, double now=0.0):
        if target_rate <= 0 or win_length <= 0:
            raise ValueError("target_rate and win_length must be positive")
        self.target_rate = target_rate
        self.win_length = win_length
        self.avg_rate = target_rate
        self.t_front = now

    cpdef double update(self, double bits, double now):
        self.avg_rate = (self.avg_rate * self.win_length + bits) / (
            now - self.t_front + self.win_length)
        self.t_front = now
        return self.avg_rate

    cpdef double out_probability(self):
        if self.avg_rate <= self.target_rate:
            return 0.0
        return (self.avg_rate - self.target_rate) / self.avg_rate


cdef class RedAverage:
    cdef public double weight
    cdef public double pkt_time
    cdef public double avg_total
    cdef public double avg_in
    cdef public bint idle
    cdef public double idle_since

    def __init__(self, double weight, double pkt_time):
        if not 0.0 < weight <= 1.0:
            raise ValueError("ewma weight must be in (0, 1]")
        self.weight = weight
        self.pkt_time = pkt_time
        self.avg_total = 0.0
        self.avg_in = 0.0
        self.idle = True
        self.idle_since = 0.0

    cpdef arrive(self, double q_total, double q_in, double now):
        cdef double w = self.weight
        cdef double m, decay
        if self.idle:
            self.idle = False
            m = (now - self.idle_since) / self.pkt_time
            if m > 0:
                decay = pow(1.0 - w, m)
                self.avg_total *= decay
                self.avg_in *= decay
        self.avg_total = (1.0 - w) * self.avg_total + w * q_total
        self.avg_in = (1.0 - w) * self.avg_in + w * q_in

    cpdef go_idle(self, double now):
        self.idle = True
        self.idle_since = now
