"""Problem generators shared by the test modules."""


from lchspde.discretize import PdeProblem
from lchspde.grid import Boundary, BoundarySpec, Grid, PiecewiseField
from lchspde.qubit_op import QubitOperator

KINDS = ["dirichlet", "neumann", "periodic"]


def random_problem(rng, family=None, max_bits=3):
    d = int(rng.integers(1, 3))
    nb = tuple(int(x) for x in rng.integers(1, max_bits + 1, size=d))
    g = Grid(nb, float(rng.choice([1.0, 0.5, 2.0])))
    faces = []
    for _ in range(d):
        lo = str(rng.choice(KINDS))
        hi = lo if lo == "periodic" else str(rng.choice(KINDS[:2]))
        faces.append((lo, hi))
    fam = family or str(rng.choice(["second_order", "first_order"]))
    n = g.n_nodes

    def two(lo, hi, name):
        return PiecewiseField.from_array(rng.choice([lo, hi], size=n), name=name)

    if fam == "second_order":
        f = {"rho": two(1, 2, "rho"), "zeta": two(0, 0.5, "zeta"), "kappa": two(1, 4, "kappa"), "alpha": two(0, 0.3, "alpha")}
    else:
        f = {"kappa": two(0.5, 1, "kappa"), "alpha": two(0, 0.2, "alpha")}
        for mu in range(d):
            f[f"beta{mu}"] = two(-0.3, 0.4, f"beta{mu}")
    return PdeProblem(fam, g, BoundarySpec(tuple(faces)), f, T=1.0, tau=0.1)


def heat(nbits=(3,), kappa=0.1, bc="dirichlet"):
    g = Grid(nbits)
    return PdeProblem("first_order", g, BoundarySpec.uniform(g.d, bc), {"kappa": PiecewiseField.constant(kappa)}, 1.0, 0.1)


def acoustic(nbits=(3, 2), c=None):
    g = Grid(nbits)
    rho = PiecewiseField.constant(1.0, "rho") if c is None else PiecewiseField.from_array(1 / c**2, name="rho")
    bc = BoundarySpec(((Boundary.DIRICHLET, Boundary.NEUMANN),) + ((Boundary.PERIODIC, Boundary.PERIODIC),) * (g.d - 1))
    return PdeProblem("second_order", g, bc, {"rho": rho}, 1.0, 0.1)


def random_strings(rng, n_qubits, count, alphabet="I01+-"):
    return ["".join(rng.choice(list(alphabet), size=n_qubits)) for _ in range(count)]


def random_hermitian(rng, n_qubits, count=4):
    """Sum of random strings plus its adjoint."""
    terms = {}
    for s in random_strings(rng, n_qubits, count):
        terms[s] = terms.get(s, 0) + complex(rng.normal(), rng.normal())
    op = QubitOperator(n_qubits, terms)
    return (op + op.adjoint()).scale(0.5)


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_RESULTS: list[str] = []


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    return ok
