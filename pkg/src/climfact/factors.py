"""Associated factors between a sector panel and a surface time series.

The cross-covariance operator from price space to surface space is
finite-rank (at most p, the number of sectors), so its singular value
decomposition needs no regularization: the p x p Gram matrix of the
operator's coordinate surfaces delivers the price-side directions, and
the surface-side directions follow by applying the operator. Projecting
both datasets onto those directions yields two K-dimensional series; a
conventional canonical correlation analysis on them produces the final
correlations and directions.

All surface algebra runs in "hat" coordinates: valid-cell values scaled
by the square root of the quadrature weights, which turns the weighted
surface inner product into a plain dot product. The surface covariance
operator itself is never materialized; its spectrum comes from the T x T
Gram matrix of the centered frames and is exact for sample operators.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientSample,
    NonConformable,
    SingularFactorCovariance,
    ZeroCrossCovariance,
)
from .grid import Surface
from .ingest import align

COND_LIMIT = 1e10


# -- hat-space embedding --------------------------------------------------


def hat_matrix(series):
    """(T, n_valid) matrix of valid cells scaled by sqrt weights."""
    return series.valid_matrix() * np.sqrt(series.domain.valid_weights)


def hat_vector(surface):
    """Hat coordinates of one surface."""
    return surface.valid_values * np.sqrt(surface.domain.valid_weights)


def surface_from_hat(domain, hat):
    """Invert the hat embedding; masked cells become NaN."""
    values = np.full(domain.shape, np.nan)
    values[domain.mask] = hat / np.sqrt(domain.valid_weights)
    return Surface(domain, values)


def _fix_signs(alpha, *followers):
    """Make the largest-magnitude entry of each alpha column positive.

    Follower matrices share column order and are flipped in lock-step so
    paired directions stay consistent. Removes the eigenvector sign
    ambiguity and keeps batch outputs byte-reproducible.
    """
    flips = np.sign(alpha[np.argmax(np.abs(alpha), axis=0), np.arange(alpha.shape[1])])
    flips[flips == 0] = 1.0
    return (alpha * flips,) + tuple(f * flips for f in followers)


# -- flat numeric engine (shared with the functional impulse module) ------


def center_columns(m):
    mean = m.mean(axis=0)
    return m - mean, mean


def cross_singular_triplets(yc, xc, tol=0.1, k=None):
    """SVD of the sample cross-covariance operator via its p x p Gram form.

    yc (T, p) and xc (T, D) are centered; returns (r, alpha, beta) where
    beta columns are orthonormal hat vectors, alpha columns orthonormal in
    R^p and r the singular values, descending. Components with
    r_k <= tol * r_1 are discarded unless k pins the count explicitly.
    """
    T = yc.shape[0]
    cross = yc.T @ xc / (T - 1)  # rows are the operator's coordinate surfaces
    gram = cross @ cross.T
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    r = np.sqrt(np.clip(vals, 0.0, None))
    if r[0] <= 0.0:
        raise ZeroCrossCovariance("cross-covariance is identically zero")
    if k is None:
        k = int(np.sum(r > tol * r[0]))
        if k == 0:
            raise ZeroCrossCovariance(
                f"no singular value clears the cutoff {tol} * r_1"
            )
    else:
        # an explicit k is still clamped to the numerical rank: dividing by
        # vanishing singular values would fabricate directions
        rank = int(np.sum(r > 1e-12 * r[0]))
        k = min(int(k), rank)
        if k < 1:
            raise ZeroCrossCovariance("requested zero components")
    r = r[:k]
    alpha = vecs[:, :k]
    beta = (cross.T @ alpha) / r
    alpha, beta = _fix_signs(alpha, beta)
    return r, alpha, beta


def _inv_sqrt_psd(s, what):
    vals, vecs = np.linalg.eigh(s)
    floor = np.finfo(float).tiny
    if vals[-1] <= 0.0 or vals[-1] / max(vals[0], floor) > COND_LIMIT:
        raise SingularFactorCovariance(
            f"{what} covariance is numerically singular "
            f"(condition number above {COND_LIMIT:g}); lower K and retry"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def canonical_correlations(ytil, xtil):
    """Conventional CCA between two K-dimensional series.

    Returns (rho, u, v): rho descending, u/v the weight matrices such that
    the canonical coordinates ytil_c @ u and xtil_c @ v have unit sample
    variance and diagonal cross-correlation rho.
    """
    yc, _ = center_columns(np.asarray(ytil, dtype=float))
    xc, _ = center_columns(np.asarray(xtil, dtype=float))
    T = yc.shape[0]
    syy = yc.T @ yc / (T - 1)
    sxx = xc.T @ xc / (T - 1)
    syx = yc.T @ xc / (T - 1)
    iy = _inv_sqrt_psd(syy, "price-side factor")
    ix = _inv_sqrt_psd(sxx, "surface-side factor")
    um, s, vt = np.linalg.svd(iy @ syx @ ix)
    u = iy @ um
    v = ix @ vt.T
    return s, u, v


def gram_eigensystem(xc, rel_tol=1e-12, max_components=None):
    """Eigenvalues and scores of the sample surface covariance operator.

    Works through the T x T Gram matrix of the centered hat frames.
    Returns (lam, scores): lam descending with lam_i > rel_tol * lam_1,
    scores[t, i] the projection of frame t on the i-th eigensurface.
    """
    T = xc.shape[0]
    gram = xc @ xc.T
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    keep = vals > rel_tol * max(vals[0], np.finfo(float).tiny)
    if max_components is not None:
        keep[max_components:] = False
    vals, vecs = vals[keep], vecs[:, keep]
    lam = vals / (T - 1)
    scores = vecs * np.sqrt(vals)
    return lam, scores


# -- domain-facing types ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovarianceOperators:
    """Sample covariance structure of an aligned (panel, surface) pair.

    The surface-to-surface operator is held implicitly through the
    centered hat frames; the cross operator is held as one hat vector per
    sector (its coordinate surfaces).
    """

    sector_ids: tuple
    times: np.ndarray
    domain: object
    c_y: np.ndarray
    cross_hat: np.ndarray = field(repr=False)  # (p, D) rows = C_YX(e_j)
    yc: np.ndarray = field(repr=False)
    xc_hat: np.ndarray = field(repr=False)
    y_mean: np.ndarray = field(repr=False)
    x_mean_hat: np.ndarray = field(repr=False)

    @property
    def n_sectors(self):
        return len(self.sector_ids)

    def cross_surface(self, j):
        """C_YX applied to the j-th coordinate vector, as a surface."""
        return surface_from_hat(self.domain, self.cross_hat[j])

    def apply_cxy(self, surface):
        """C_XY(f): the p-vector E[<X, f> Y] for a given surface f."""
        if surface.domain is not self.domain:
            raise NonConformable("surface lives on a different domain")
        return self.cross_hat @ hat_vector(surface)

    def apply_cyx(self, y):
        """C_YX(y): the surface E[<Y, y> X] for a price-side vector y."""
        return surface_from_hat(self.domain, np.asarray(y, dtype=float) @ self.cross_hat)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Singular system of the cross-covariance operator."""

    singular_values: np.ndarray
    alpha: np.ndarray           # (p, K) price-side singular vectors
    beta_hat: np.ndarray = field(repr=False)  # (D, K) surface-side, hat coords
    domain: object = None

    @property
    def k(self):
        return len(self.singular_values)

    def beta_surface(self, k):
        return surface_from_hat(self.domain, self.beta_hat[:, k])


@dataclass(frozen=True, eq=False)
class FactorProjections:
    """Raw coordinates of both datasets in the singular direction bases."""

    y_proj: np.ndarray
    x_proj: np.ndarray
    alpha: np.ndarray
    beta_hat: np.ndarray = field(repr=False)
    domain: object = None
    sector_ids: tuple = ()
    times: np.ndarray = None


@dataclass(frozen=True, eq=False)
class AssociatedFactorSet:
    """Final canonical triplets: correlations and paired directions.

    a[k] is a price-side direction with unit-variance projection; b_hat[k]
    the paired surface direction in hat coordinates. y_factors/x_factors
    are the raw canonical coordinates <a_k, Y_t> and <b_k, X_t>.
    """

    rho: np.ndarray
    a: np.ndarray               # (K, p)
    b_hat: np.ndarray = field(repr=False)  # (K, D)
    y_factors: np.ndarray = field(repr=False)
    x_factors: np.ndarray = field(repr=False)
    sector_ids: tuple = ()
    times: np.ndarray = None
    domain: object = None
    singular_values: np.ndarray = None

    @property
    def k(self):
        return len(self.rho)

    def b_surface(self, k):
        return surface_from_hat(self.domain, self.b_hat[k])


# -- operations ------------------------------------------------------------


def estimate_covariances(panel, series):
    """Sample covariance operators of an aligned panel/surface pair."""
    (panel, series), _ = align(panel, series)
    T, p = panel.values.shape
    if T < p + 2:
        raise InsufficientSample(f"need T >= p + 2, got T={T} with p={p}")
    yc, y_mean = center_columns(panel.values)
    xhat = hat_matrix(series)
    xc, x_mean = center_columns(xhat)
    c_y = yc.T @ yc / (T - 1)
    cross = yc.T @ xc / (T - 1)
    return CovarianceOperators(
        sector_ids=panel.sector_ids, times=panel.times, domain=series.domain,
        c_y=c_y, cross_hat=cross, yc=yc, xc_hat=xc,
        y_mean=y_mean, x_mean_hat=x_mean,
    )


def svd_cross(operators, tol=0.1, k=None):
    """Singular triplets of the cross operator, cutoff at tol * r_1."""
    r, alpha, beta = cross_singular_triplets(
        operators.yc, operators.xc_hat, tol=tol, k=k
    )
    return SpectralDecomposition(r, alpha, beta, operators.domain)


def extract_factors(panel, series, decomposition, k=None):
    """Project the raw panel and frames onto the singular directions."""
    (panel, series), _ = align(panel, series)
    alpha = decomposition.alpha
    beta = decomposition.beta_hat
    if k is not None:
        alpha, beta = alpha[:, :k], beta[:, :k]
    y_proj = panel.values @ alpha
    x_proj = hat_matrix(series) @ beta
    return FactorProjections(
        y_proj=y_proj, x_proj=x_proj, alpha=alpha, beta_hat=beta,
        domain=series.domain, sector_ids=panel.sector_ids, times=panel.times,
    )


def cca_on_factors(projections):
    """Conventional CCA on the factor coordinates, mapped back to data space."""
    rho, u, v = canonical_correlations(projections.y_proj, projections.x_proj)
    a_cols, u, v = _fix_signs(projections.alpha @ u, u, v)
    a = a_cols.T                           # (K, p)
    b = (projections.beta_hat @ v).T       # (K, D)
    y_factors = projections.y_proj @ u
    x_factors = projections.x_proj @ v
    return AssociatedFactorSet(
        rho=rho, a=a, b_hat=b,
        y_factors=y_factors, x_factors=x_factors,
        sector_ids=projections.sector_ids, times=projections.times,
        domain=projections.domain,
    )


def permutation_cutoffs(yc, xc, n_shuffles=199, level=0.95, rng=None):
    """Null singular-value quantiles from time-index shuffles of the panel."""
    if rng is None:
        rng = np.random.default_rng(42)
    T = yc.shape[0]
    k_max = min(yc.shape[1], xc.shape[1], T - 1)
    null = np.empty((n_shuffles, k_max))
    for s in range(n_shuffles):
        perm = rng.permutation(T)
        cross = yc[perm].T @ xc / (T - 1)
        vals = np.linalg.eigvalsh(cross @ cross.T)[::-1]
        null[s] = np.sqrt(np.clip(vals[:k_max], 0.0, None))
    return np.quantile(null, level, axis=0)


def drop_degenerate_sectors(panel):
    """Remove zero-variance columns; the price-side covariance must be
    invertible for the final rotation. Warns with the dropped ids."""
    variances = np.var(panel.values, axis=0, ddof=1)
    degenerate = variances <= 0.0
    if not degenerate.any():
        return panel
    dropped = tuple(i for i, bad in zip(panel.sector_ids, degenerate) if bad)
    if degenerate.all():
        raise SingularFactorCovariance(
            f"every sector is constant over the window: {dropped}"
        )
    warnings.warn(
        f"dropping zero-variance sector(s) before factor extraction: "
        f"{', '.join(dropped)}",
        stacklevel=3,
    )
    keep = ~degenerate
    return type(panel)(
        panel.times,
        tuple(i for i, ok in zip(panel.sector_ids, keep) if ok),
        panel.values[:, keep],
        panel.dropped + dropped,
    )


def associated_factors(panel, series, tol=0.1, k=None, permutation=None,
                       rng=None):
    """Full two-stage pipeline: cross SVD, projection, CCA on factors.

    permutation, when given, is a dict with keys n (shuffles) and level;
    components whose singular value falls below the null quantile are
    dropped on top of the relative cutoff.
    """
    panel = drop_degenerate_sectors(panel)
    operators = estimate_covariances(panel, series)
    decomposition = svd_cross(operators, tol=tol, k=k)
    keep = decomposition.k
    if permutation and k is None:
        cut = permutation_cutoffs(
            operators.yc, operators.xc_hat,
            n_shuffles=permutation.get("n", 199),
            level=permutation.get("level", 0.95),
            rng=rng,
        )
        r = decomposition.singular_values
        above = r > cut[: len(r)]
        keep = int(np.argmin(above)) if not above.all() else len(r)
        if keep == 0:
            raise ZeroCrossCovariance(
                "no component clears the permutation null"
            )
    projections = extract_factors(panel, series, decomposition, k=keep)
    result = cca_on_factors(projections)
    return AssociatedFactorSet(
        rho=result.rho, a=result.a, b_hat=result.b_hat,
        y_factors=result.y_factors, x_factors=result.x_factors,
        sector_ids=result.sector_ids, times=result.times, domain=result.domain,
        singular_values=decomposition.singular_values[:keep],
    )


# -- regularity diagnostic -------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegularityReport:
    """Partial sums probing the summability of inverse-eigenvalue loadings.

    For each price-side eigenvector j the report tracks the partial sums
    over surface eigendirections i of lam_i^{-1} c_ij^2 (squared variant)
    and lam_i^{-1} |c_ij| (absolute variant), where c_ij is the sample
    cross moment between the i-th surface score and the j-th panel score.
    Sums that keep growing instead of plateauing are flagged; the flag is
    advisory and never blocks estimation.
    """

    eigenvalues: np.ndarray
    partial_sums_sq: np.ndarray    # (n_components, p)
    partial_sums_abs: np.ndarray
    flagged: np.ndarray            # (p,) bool, squared variant
    tail_fraction: np.ndarray      # (p,)

    @property
    def n_components(self):
        return len(self.eigenvalues)


def regularity_diagnostic(panel, series, max_components=None,
                          tail_limit=0.25):
    """Probe whether the cross loadings decay fast enough relative to
    the surface spectrum; diagnostic only."""
    (panel, series), _ = align(panel, series)
    yc, _ = center_columns(panel.values)
    xc, _ = center_columns(hat_matrix(series))
    T = yc.shape[0]
    lam, scores = gram_eigensystem(xc, max_components=max_components)
    _, psi = np.linalg.eigh(yc.T @ yc / (T - 1))
    psi = psi[:, ::-1]
    yproj = yc @ psi
    c = scores.T @ yproj / (T - 1)         # (n, p)
    terms_sq = c**2 / lam[:, None]
    terms_abs = np.abs(c) / lam[:, None]
    sums_sq = np.cumsum(terms_sq, axis=0)
    sums_abs = np.cumsum(terms_abs, axis=0)
    n = len(lam)
    tail = np.zeros(yc.shape[1])
    if n >= 4:
        half = n // 2
        total = sums_sq[-1]
        grown = total - sums_sq[half - 1]
        nonzero = total > 0
        tail[nonzero] = grown[nonzero] / total[nonzero]
    flagged = tail > tail_limit
    return RegularityReport(
        eigenvalues=lam, partial_sums_sq=sums_sq, partial_sums_abs=sums_abs,
        flagged=flagged, tail_fraction=tail,
    )
