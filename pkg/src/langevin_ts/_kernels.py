"""Compiled Langevin chains for Gaussian likelihood with a Gaussian prior.

These consume exactly the random arrays the generic path consumes
(step noise, then batch-selection words), so both paths walk the same
chain up to floating-point summation order.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def gaussian_chain(theta0, alpha, sigma2, prior_mean, prior_var, data, total, h, noise, bits):
    """Run ``noise.shape[0]`` Langevin steps.

    ``total`` is ``data.sum()``, used for full batches. ``bits`` holds ``(N, k)`` uint32 words selecting each step's batch, or
    has shape ``(0, 0)`` for full-batch gradients.
    """
    n_steps, d = noise.shape
    n = data.shape[0]
    theta = theta0.copy()
    diffusion = np.sqrt(2.0 * h)
    full = bits.shape[0] == 0
    k = n if full else bits.shape[1]
    scale = n / k

    mark = np.zeros(0 if full else n, dtype=np.bool_)
    picked = np.empty(k, dtype=np.int64)

    for step in range(n_steps):
        proj = 0.0
        for j in range(d):
            proj += alpha[j] * theta[j]
        batch_sum = total
        if not full:
            # Floyd's subset sampling; marks are cleared after each step.
            batch_sum = 0.0
            for i in range(k):
                j = n - k + i
                t = (np.uint64(bits[step, i]) * np.uint64(j + 1)) >> np.uint64(32)
                if mark[t]:
                    t = np.uint64(j)
                mark[t] = True
                picked[i] = t
                batch_sum += data[t]
            for i in range(k):
                mark[picked[i]] = False
        resid = (batch_sum - k * proj) / sigma2
        for j in range(d):
            grad = -scale * alpha[j] * resid + (theta[j] - prior_mean[j]) / prior_var
            theta[j] = theta[j] - h * grad + diffusion * noise[step, j]
    return theta


EXACT, MIXTURE, ULA = 0, 1, 2


@njit(cache=True)
def conjugate_run(
    kinds, gamma, prior_mean, prior_var, sigma2, alpha, lik_L, reward_mean, reward_sd,
    mix_alpha, atom, h_table, n_table, sampler_rngs, reward_rngs, horizon,
):
    """Whole Thompson run over 1-d Gaussian arms with Gaussian priors.

    Per-arm draws follow the interpreted round loop one for one: a prior
    draw when unpulled, one normal for exact arms, a uniform then maybe a
    normal for mixture arms, ``N + 1`` normals for ULA arms. Arithmetic
    is written in the same order so results agree bit for bit.
    """
    K = kinds.shape[0]
    counts = np.zeros(K, dtype=np.int64)
    sums = np.zeros(K)
    warm = np.zeros(K)
    has_warm = np.zeros(K, dtype=np.bool_)
    chosen = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    scores = np.empty(K)

    for t in range(horizon):
        for a in range(K):
            rng = sampler_rngs[a]
            n = counts[a]
            if n == 0:
                sd = np.sqrt(1.0 / (gamma[a] * (1.0 / prior_var[a])))
                theta = prior_mean[a] + sd * rng.standard_normal()
            elif kinds[a] == ULA:
                h = h_table[a, n]
                th = warm[a] if has_warm[a] else prior_mean[a]
                diffusion = np.sqrt(2.0 * h)
                for _ in range(n_table[a, n]):
                    xi = rng.standard_normal()
                    proj = 0.0 + alpha[a] * th
                    resid = (sums[a] - n * proj) / sigma2[a]
                    grad = -1.0 * alpha[a] * resid + (th - prior_mean[a]) / prior_var[a]
                    th = th - h * grad + diffusion * xi
                z = rng.standard_normal()
                warm[a] = th
                has_warm[a] = True
                theta = th + z * np.sqrt(1.0 / (n * lik_L[a] * gamma[a]))
            else:
                scale = gamma[a]
                fire = False
                if kinds[a] == MIXTURE:
                    scale = 1.0
                    fire = rng.random() < n ** (-mix_alpha[a])
                if fire:
                    theta = atom[a]
                else:
                    precision = 1.0 / prior_var[a] + n * alpha[a] * alpha[a] / sigma2[a]
                    mean = (prior_mean[a] / prior_var[a] + alpha[a] * sums[a] / sigma2[a]) / precision
                    sd = np.sqrt(1.0 / (scale * precision))
                    theta = mean + sd * rng.standard_normal()
            scores[a] = alpha[a] * theta
        best = 0
        for a in range(1, K):
            if scores[a] > scores[best]:
                best = a
        x = reward_mean[best] + reward_sd[best] * reward_rngs[best].standard_normal()
        chosen[t] = best
        rewards[t] = x
        counts[best] += 1
        sums[best] += x
    return chosen, rewards, warm, has_warm
