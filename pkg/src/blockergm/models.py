"""Model definition: terms plus the parameter-to-coefficient map.

A model couples a TermSet with an EtaMap that sends the global parameter
vector theta to per-neighborhood coefficient vectors. Coefficients may be
shared across neighborhoods, shifted by size bucket, or generated by a
geometric weight curve over shared-partner bins.
"""

from __future__ import annotations

import numpy as np

from .statistics import ModelError, TermSet, parse_terms

__all__ = [
    "ModelError",
    "Identity",
    "SizeBucketDeviation",
    "GeometricWeights",
    "EtaMap",
    "Model",
    "model_from_config",
    "DEFAULT_SIZE_THRESHOLDS",
]

# geometric decay must stay above 1/2 so the weight series is bounded
MIN_DECAY = 0.5 + 1e-9

# optimizers project decay coordinates onto [DECAY_FLOOR, inf); an
# estimate pinned there sits on the open edge of the parameter space
DECAY_FLOOR = 0.5 + 1e-6

DEFAULT_SIZE_THRESHOLDS = (18, 25)


class Identity:
    """One shared coefficient for a scalar term."""

    def __init__(self, index):
        self.index = int(index)

    def coef(self, theta, size, dim):
        return np.array([theta[self.index]])

    def jacobian(self, theta, size, dim, n_parameters):
        j = np.zeros((1, n_parameters))
        j[0, self.index] = 1.0
        return j

    def validate(self, theta):
        pass


class SizeBucketDeviation:
    """Base coefficient plus a deviation by neighborhood-size bucket.

    Buckets are closed-open intervals of node count with boundaries
    `thresholds`; the smallest bucket carries no deviation parameter.
    """

    def __init__(self, base_index, deviation_indices, thresholds=DEFAULT_SIZE_THRESHOLDS):
        self.base_index = int(base_index)
        self.deviation_indices = tuple(int(i) for i in deviation_indices)
        ts = tuple(int(t) for t in thresholds)
        if list(ts) != sorted(set(ts)) or any(t < 1 for t in ts):
            raise ModelError(f"size thresholds must be increasing positive ints, got {ts}")
        if len(self.deviation_indices) != len(ts):
            raise ModelError("need one deviation parameter per non-smallest bucket")
        self.thresholds = ts

    def bucket(self, size):
        b = 0
        for t in self.thresholds:
            if size >= t:
                b += 1
        return b

    def coef(self, theta, size, dim):
        value = theta[self.base_index]
        b = self.bucket(size)
        if b > 0:
            value = value + theta[self.deviation_indices[b - 1]]
        return np.array([value])

    def jacobian(self, theta, size, dim, n_parameters):
        j = np.zeros((1, n_parameters))
        j[0, self.base_index] = 1.0
        b = self.bucket(size)
        if b > 0:
            j[0, self.deviation_indices[b - 1]] = 1.0
        return j

    def validate(self, theta):
        pass


class GeometricWeights:
    """Geometrically decaying coefficients over shared-partner bins.

    With scale a and decay r > 1/2, bin i gets coefficient
    a * r * (1 - (1 - 1/r)**i). Decay 1 makes every bin weight equal a.
    """

    def __init__(self, scale_index, decay_index):
        self.scale_index = int(scale_index)
        self.decay_index = int(decay_index)

    def coef(self, theta, size, dim):
        a = theta[self.scale_index]
        r = theta[self.decay_index]
        if dim == 0:
            return np.zeros(0)
        i = np.arange(1, dim + 1, dtype=np.float64)
        beta = 1.0 - 1.0 / r
        return a * r * (1.0 - beta ** i)

    def jacobian(self, theta, size, dim, n_parameters):
        a = theta[self.scale_index]
        r = theta[self.decay_index]
        j = np.zeros((dim, n_parameters))
        if dim == 0:
            return j
        i = np.arange(1, dim + 1, dtype=np.float64)
        beta = 1.0 - 1.0 / r
        # beta**(i-1) with 0**0 == 1 so the decay-1 limit is exact
        j[:, self.scale_index] = r * (1.0 - beta ** i)
        j[:, self.decay_index] = a * (1.0 - beta ** i - (i / r) * beta ** (i - 1.0))
        return j

    def validate(self, theta):
        r = theta[self.decay_index]
        if not np.isfinite(r) or r <= MIN_DECAY:
            raise ModelError(f"geometric decay must exceed 1/2, got {r}")


class EtaMap:
    """Maps the parameter vector to per-neighborhood coefficient vectors."""

    def __init__(self, rules, n_parameters, labels):
        self.rules = tuple(rules)
        self.n_parameters = int(n_parameters)
        self.labels = tuple(labels)
        if len(self.labels) != self.n_parameters:
            raise ModelError("one label per parameter required")

    @classmethod
    def build(cls, terms, rule_specs):
        """Assign parameter slots for the given per-term rule names.

        `rule_specs` maps term name to either a rule name string
        ('identity', 'size_buckets', 'geometric') or a dict with a 'rule'
        key and rule options. Primary slots are assigned in term order;
        size-bucket deviation slots follow, grouped by bucket.
        """
        specs = []
        for t in terms:
            raw = rule_specs.get(t.name)
            if raw is None:
                raw = "geometric" if t.kind == "esp" else "identity"
            if isinstance(raw, str):
                raw = {"rule": raw}
            if not isinstance(raw, dict) or "rule" not in raw:
                raise ModelError(f"bad coefficient rule for term {t.name!r}: {raw!r}")
            specs.append(dict(raw))
        unknown = set(rule_specs) - {t.name for t in terms}
        if unknown:
            raise ModelError(f"coefficient rules for unknown terms: {sorted(unknown)}")

        labels = []
        slots = []  # per term: partial rule info
        for t, spec in zip(terms, specs):
            name = spec["rule"]
            if t.kind == "esp":
                if name != "geometric":
                    raise ModelError("shared-partner histogram terms need the geometric rule")
            elif name == "geometric":
                raise ModelError(f"geometric rule requires a shared-partner term, not {t.name!r}")
            if name == "identity":
                slots.append(("identity", t, len(labels)))
                labels.append(t.name)
            elif name == "size_buckets":
                thresholds = tuple(spec.get("thresholds", DEFAULT_SIZE_THRESHOLDS))
                slots.append(("size_buckets", t, len(labels), thresholds))
                labels.append(t.name)
            elif name == "geometric":
                slots.append(("geometric", t, len(labels)))
                labels.append(f"{t.name}:scale")
                labels.append(f"{t.name}:decay")
            else:
                raise ModelError(f"unknown coefficient rule {name!r} for term {t.name!r}")

        # deviation slots, bucket by bucket, after the primary block
        deviations = {}
        max_buckets = 0
        for slot in slots:
            if slot[0] == "size_buckets":
                max_buckets = max(max_buckets, len(slot[3]) + 1)
        for b in range(1, max_buckets):
            for slot in slots:
                if slot[0] != "size_buckets":
                    continue
                _, t, _, thresholds = slot
                if b <= len(thresholds):
                    deviations.setdefault(t.name, []).append(len(labels))
                    labels.append(f"{t.name}:size{b + 1}")

        rules = []
        for slot in slots:
            if slot[0] == "identity":
                rules.append(Identity(slot[2]))
            elif slot[0] == "size_buckets":
                _, t, base, thresholds = slot
                rules.append(SizeBucketDeviation(base, deviations[t.name], thresholds))
            else:
                rules.append(GeometricWeights(slot[2], slot[2] + 1))
        return cls(rules, len(labels), labels)

    def validate_theta(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_parameters,):
            raise ModelError(
                f"theta must have {self.n_parameters} coordinates, got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ModelError("theta must be finite")
        for rule in self.rules:
            rule.validate(theta)
        return theta


class Model:
    """A TermSet together with its EtaMap."""

    def __init__(self, terms, eta_map=None, rule_specs=None):
        if not isinstance(terms, TermSet):
            terms = parse_terms(terms)
        self.terms = terms
        if eta_map is None:
            eta_map = EtaMap.build(terms, rule_specs or {})
        if len(eta_map.rules) != len(terms):
            raise ModelError("one coefficient rule per term required")
        self.eta_map = eta_map

    @property
    def n_parameters(self):
        return self.eta_map.n_parameters

    @property
    def parameter_labels(self):
        return self.eta_map.labels

    def validate_theta(self, theta):
        return self.eta_map.validate_theta(theta)

    def is_curved(self):
        return any(isinstance(r, GeometricWeights) for r in self.eta_map.rules)

    def default_theta(self):
        """All-zero parameters, with geometric decay slots set to 1."""
        theta = np.zeros(self.n_parameters)
        for i in self.decay_indices:
            theta[i] = 1.0
        return theta

    @property
    def decay_indices(self):
        """Parameter slots holding geometric decay coordinates."""
        return tuple(r.decay_index for r in self.eta_map.rules
                     if isinstance(r, GeometricWeights))

    def project_theta(self, theta):
        """Copy of theta with decay coordinates lifted onto the domain."""
        theta = np.array(theta, dtype=np.float64)
        for i in self.decay_indices:
            theta[i] = max(theta[i], DECAY_FLOOR)
        return theta

    def pinned_decays(self, theta, slack=1e-9):
        """Slots of decay coordinates sitting at the projection floor."""
        return tuple(i for i in self.decay_indices
                     if theta[i] <= DECAY_FLOOR + slack)

    def eta_k(self, theta, graph, k):
        theta = self.eta_map.validate_theta(theta)
        size = graph.sizes[k]
        parts = [
            rule.coef(theta, size, t.dim(graph, k))
            for rule, t in zip(self.eta_map.rules, self.terms)
        ]
        return np.concatenate(parts)

    def eta(self, theta, graph):
        return [self.eta_k(theta, graph, k) for k in range(graph.n_neighborhoods)]

    def eta_jacobian_k(self, theta, graph, k):
        """d eta_k / d theta, shape (dim_k, n_parameters)."""
        theta = self.eta_map.validate_theta(theta)
        size = graph.sizes[k]
        p = self.n_parameters
        parts = [
            rule.jacobian(theta, size, t.dim(graph, k), p)
            for rule, t in zip(self.eta_map.rules, self.terms)
        ]
        return np.vstack(parts) if parts else np.zeros((0, p))

    def eta_jacobians(self, theta, graph):
        return [self.eta_jacobian_k(theta, graph, k) for k in range(graph.n_neighborhoods)]

    def log_unnormalized(self, theta, graph, stats=None):
        """Inner product of coefficients with sufficient statistics."""
        if stats is None:
            stats = self.terms.compute(graph)
        total = 0.0
        for k, s in enumerate(stats):
            total += float(self.eta_k(theta, graph, k) @ s)
        return total

    def conditional_edge_logit(self, theta, graph, dyad):
        """Log-odds that `dyad` is an edge given the rest of the graph."""
        tail, head = dyad
        kt, it = graph.locate(tail)
        kh, ih = graph.locate(head)
        if kt != kh:
            raise ModelError(f"dyad ({tail!r}, {head!r}) crosses neighborhoods")
        if it == ih:
            raise ModelError(f"self-loop at {tail!r} is not a dyad")
        delta = self.terms.change_k(graph, kt, it, ih)
        return float(self.eta_k(theta, graph, kt) @ delta)


def model_from_config(config):
    """Build a Model from a parsed config mapping.

    Expected keys: ``terms`` (list of term strings) and optional ``eta``
    (mapping of term name to coefficient rule).
    """
    if "terms" not in config:
        raise ModelError("model config needs a 'terms' list")
    specs = config["terms"]
    if not isinstance(specs, (list, tuple)) or not specs:
        raise ModelError("'terms' must be a non-empty list of term strings")
    terms = parse_terms(specs)
    eta_spec = config.get("eta", {})
    if not isinstance(eta_spec, dict):
        raise ModelError("'eta' must be a table of term: rule entries")
    return Model(terms, rule_specs=eta_spec)
