"""Certified capitulation verdicts for abelian fields of prime conductor.

Each decision rule is a pure function returning a small "fragment" dict
(rule name, inputs, and what it certifies).  classify() applies the rules in
a fixed order — no-potential, parity, Lemma-4 style exact kernels, imaginary
bounds, and finally the eigenspace computation from a Fitting-ideal record —
and returns the strongest certified verdict together with the full
certificate chain.  Undetermined is an honest output: the engine never
guesses beyond certified rules; a handful of ad hoc resolutions live in an
explicit fixture table.
"""

import json
from dataclasses import dataclass

from .arith import factor
from .errors import HypothesisNotMet, InsufficientData
from .iwasawa import (capitulation_module, eigenspace_class_invariants,
                      maximal_capitulation)

REAL_KINDS = ("quadratic-real", "cyclic-cubic", "cyclic")


@dataclass(frozen=True)
class FieldDescriptor:
    kind: str  # quadratic-real | quadratic-imaginary | cyclic-cubic | cyclic
    conductor: int
    degree: int
    roots_of_unity_count: int = 2


def quadratic_real_field(ell) -> FieldDescriptor:
    return FieldDescriptor("quadratic-real", ell, 2)


def quadratic_imaginary_field(d) -> FieldDescriptor:
    if d >= 0:
        raise ValueError("discriminant must be negative")
    w = {-3: 6, -4: 4}.get(d, 2)
    return FieldDescriptor("quadratic-imaginary", -d, 2, w)


def cyclic_cubic_field(ell) -> FieldDescriptor:
    return FieldDescriptor("cyclic-cubic", ell, 3)


@dataclass(frozen=True)
class CapitulationVerdict:
    field: FieldDescriptor
    p: int
    kernel_order: object  # int, or (lo, hi) interval
    kernel_invariants: tuple  # or None when only an order/interval is known
    status: str  # full | partial | none | no-potential | undetermined
    certificates: tuple  # of (rule_name, ((key, value), ...))

    def to_json(self) -> str:
        kernel = {"order": list(self.kernel_order)
                  if isinstance(self.kernel_order, tuple)
                  else self.kernel_order}
        kernel["invariants"] = (list(self.kernel_invariants)
                                if self.kernel_invariants is not None else None)
        doc = {
            "field": {
                "kind": self.field.kind,
                "conductor": self.field.conductor,
                "degree": self.field.degree,
                "roots_of_unity_count": self.field.roots_of_unity_count,
            },
            "p": self.p,
            "status": self.status,
            "kernel": kernel,
            "certificates": [
                {"rule": name, **dict(inputs)} for name, inputs in self.certificates
            ],
        }
        return json.dumps(doc)


def _euler_phi(n):
    out = n
    for q in factor(n).primes():
        out = out // q * (q - 1)
    return out


def _order(invariants):
    out = 1
    for d in invariants:
        out *= d
    return out


def _torsion_subgroup(invariants, m):
    """Invariants of the subgroup of elements of order dividing m."""
    from math import gcd

    return tuple(g for g in (gcd(d, m) for d in invariants) if g > 1)


# ---------------------------------------------------------------------------
# decision rules


def potential_capitulation(class_order, n, d) -> bool:
    """A class of order class_order can capitulate in Q(zeta_n) only if its
    order divides phi(n)/d (d the degree of the base field)."""
    phi = _euler_phi(n)
    if phi % d:
        raise ValueError("degree must divide phi(conductor)")
    return (phi // d) % class_order == 0


def norm_bound(class_order, relative_degree) -> bool:
    """Capitulation in a degree-relative_degree extension forces the norm
    (the class to the power of the degree) to be principal: possible only
    when class_order divides relative_degree."""
    return relative_degree % class_order == 0


def lemma4_i(p_part_F, p_part_L, ell, a, ramification_ok):
    """Degree-ell^a extension F -> L with no nontrivial unramified
    subextension and ell not dividing h_L/h_F: the capitulation kernel is
    exactly the classes of order dividing ell^a."""
    inv_F = (p_part_F,) if isinstance(p_part_F, int) else tuple(p_part_F)
    inv_L = (p_part_L,) if isinstance(p_part_L, int) else tuple(p_part_L)
    if not ramification_ok:
        raise HypothesisNotMet("unramified subextension not excluded")
    hF, hL = _order(inv_F), _order(inv_L)
    if hL % hF or (hL // hF) % ell == 0:
        raise HypothesisNotMet(f"{ell} divides h_L/h_F")
    kernel = _torsion_subgroup(inv_F, ell**a)
    return {
        "rule": "lemma4_i",
        "kernel_order": _order(kernel),
        "kernel_invariants": kernel,
        "exact": True,
        "inputs": (("ell", ell), ("a", a)),
    }


def lemma4_ii(f, k, ell):
    """ell odd, degree-ell extension, ell-part of C_L cyclic of order
    ell^k, ell-part of C_F of order ell^f with f < k: then f = k - 1 and
    the map C_F -> C_L is injective (no capitulation)."""
    if ell == 2:
        raise HypothesisNotMet("ell must be odd")
    if not f < k:
        raise HypothesisNotMet("requires f < k")
    if f != k - 1:
        raise HypothesisNotMet("f < k forces f = k - 1; inputs inconsistent")
    return {
        "rule": "lemma4_ii",
        "kernel_order": 1,
        "kernel_invariants": (),
        "exact": True,
        "inputs": (("f", f), ("k", k), ("ell", ell)),
    }


def lemma4_iii(ell, class_part_L):
    """ell odd, degree-ell extension, ell-part of C_L = (Z/ell)^2: all
    classes of order ell in F become principal in L."""
    if ell == 2:
        raise HypothesisNotMet("ell must be odd")
    if tuple(class_part_L) != (ell, ell):
        raise HypothesisNotMet(f"class part of L must be ({ell},{ell})")
    return {
        "rule": "lemma4_iii",
        "capitulates_order": ell,
        "inputs": (("ell", ell),),
    }


def imaginary_bound(field, class_invariants):
    """Bounds for an imaginary quadratic field with units {+-1}: any
    capitulating class has order dividing 4 (so order > 4 elements are
    certified non-capitulating), and exponent-2 class groups capitulate
    fully by genus theory.  Exponent-4 groups are left undetermined."""
    inv = tuple(class_invariants)
    exponent = max(inv, default=1)
    order = _order(inv)
    if exponent == 1:
        return {"rule": "imaginary_bound", "status": "none",
                "kernel_order": 1, "kernel_invariants": (),
                "inputs": (("invariants", inv),)}
    if exponent == 2:
        return {"rule": "genus_capitulation", "status": "full",
                "kernel_order": order, "kernel_invariants": inv,
                "inputs": (("invariants", inv),)}
    bound = _torsion_subgroup(inv, 4)
    if exponent == 4:
        return {"rule": "cor2_bound", "status": "undetermined",
                "kernel_order": (1, _order(bound)),
                "kernel_invariants": None,
                "inputs": (("invariants", inv), ("bound", bound))}
    return {"rule": "cor2_bound", "status": "undetermined",
            "kernel_order": (1, _order(bound)), "kernel_invariants": None,
            "non_capitulating": True,
            "inputs": (("invariants", inv), ("bound", bound))}


def parity_obstruction(p, relative_degree_real):
    """Totally real base of prime conductor: the class map into Q(zeta_l)+
    is injective on the 2-part when the relative degree is odd (and the
    further step to Q(zeta_l) is injective).  Neutral otherwise."""
    if p == 2 and relative_degree_real % 2 == 1:
        return {"rule": "parity_obstruction", "status": "none",
                "kernel_order": 1, "kernel_invariants": (),
                "inputs": (("relative_degree", relative_degree_real),)}
    return None


# fixture resolutions for fields the general rules leave undetermined
FIXTURES = {
    ("quadratic-imaginary", 39): {
        "rule": "fixture", "status": "full",
        "inputs": (("field", "Q(sqrt(-39))"), ("resolution", "full")),
    },
}


# ---------------------------------------------------------------------------
# classifier


def _cert(frag):
    return (frag["rule"], tuple(frag.get("inputs", ())))


def classify(field, p, class_invariants=None, fitting=None,
             class_invariants_L=None) -> CapitulationVerdict:
    """Verdict for the p-part of the class group of `field` capitulating in
    its minimal cyclotomic field.  Rules are applied in a fixed order:
    no-potential, parity, exact-kernel rules (when the target class part is
    supplied),
    imaginary bounds (+fixtures), then the eigenspace computation from a
    Fitting-ideal record.  Exact eigenspace kernels win over intervals.
    """
    certs = []
    ring = ideal = None
    if fitting is not None:
        ring = fitting.ring()
        ideal = fitting.ideal(ring)
        if class_invariants is None:
            class_invariants = eigenspace_class_invariants(ring, ideal)
            certs.append(("eigenspace_class_part",
                          (("invariants", tuple(class_invariants)),)))
    if class_invariants is None:
        raise InsufficientData("no class part and no Fitting record supplied")
    inv = tuple(class_invariants)
    order = _order(inv)

    def verdict(kernel_order, kernel_invariants, status):
        return CapitulationVerdict(field, p, kernel_order, kernel_invariants,
                                   status, tuple(certs))

    if order == 1:
        certs.append(("trivial_class_part", ()))
        return verdict(1, (), "none")

    # 1. potential capitulation: orders must divide phi(n)/degree
    if isinstance(p, int):
        possible = potential_capitulation(p, field.conductor, field.degree)
        certs.append(("potential_capitulation",
                      (("conductor", field.conductor),
                       ("degree", field.degree), ("possible", possible))))
        if not possible:
            return verdict(1, (), "no-potential")

    # 2. parity obstruction for totally real fields at p = 2
    if p == 2 and field.kind in REAL_KINDS:
        rel = _euler_phi(field.conductor) // (2 * field.degree)
        frag = parity_obstruction(p, rel)
        if frag is not None:
            certs.append(_cert(frag))
            return verdict(1, (), "none")

    # 3. exact-kernel rules, when the class part of the target field is known
    if class_invariants_L is not None:
        try:
            frag = lemma4_i(inv, class_invariants_L, p, 1, True)
            certs.append(_cert(frag))
            return verdict(
                frag["kernel_order"], frag["kernel_invariants"],
                "full" if frag["kernel_order"] == order
                else ("none" if frag["kernel_order"] == 1 else "partial"),
            )
        except HypothesisNotMet:
            pass
        try:
            invL = tuple(class_invariants_L)
            if len(inv) <= 1 and len(invL) == 1:
                f = _p_log(order, p)
                k = _p_log(_order(invL), p)
                frag = lemma4_ii(f, k, p)
                certs.append(_cert(frag))
                return verdict(1, (), "none")
        except HypothesisNotMet:
            pass

    # 4. imaginary quadratic bounds and fixtures
    if field.kind == "quadratic-imaginary" and p in (2, "all"):
        frag = imaginary_bound(field, inv)
        certs.append(_cert(frag))
        fix = FIXTURES.get((field.kind, field.conductor))
        if frag["status"] != "undetermined":
            return verdict(frag["kernel_order"], frag["kernel_invariants"],
                           frag["status"])
        if fix is not None:
            certs.append((fix["rule"], tuple(fix["inputs"])))
            if fix["status"] == "full":
                return verdict(order, inv, "full")
        return verdict(frag["kernel_order"], frag["kernel_invariants"],
                       "undetermined")

    # 5. eigenspace computation (exact kernel)
    if fitting is not None:
        module = capitulation_module(ring, ideal)
        kernel = module.order
        certs.append(("eigenspace_kernel",
                      (("order", kernel), ("invariants", module.invariants))))
        # maximal p-capitulation: every class with potential capitulation
        # (order dividing the p-part of phi(n)/degree) actually capitulates
        potential = _order(_torsion_subgroup(
            inv, p ** _p_val(_euler_phi(field.conductor) // field.degree, p)))
        if kernel == potential and kernel > 1:
            certs.append(("maximal_capitulation",
                          (("potential_subgroup_order", potential),)))
        if maximal_capitulation(ring, ideal):
            certs.append(("cor3_full", ()))
        status = ("none" if kernel == 1
                  else "full" if kernel == order else "partial")
        return verdict(kernel, module.invariants, status)

    raise InsufficientData(
        "no rule certified a verdict and no Fitting record supplied"
    )


def _p_val(x, p):
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _p_log(x, p):
    k = 0
    while x > 1:
        if x % p:
            raise HypothesisNotMet("class part is not a p-group")
        x //= p
        k += 1
    return k
