"""Example models shipped with the package."""
from importlib import resources

MODELS = ("fig1", "fig2-parallel", "fig2-choice", "seq", "split", "sum", "twopc", "protein")


def path(name: str):
    """Filesystem path of a corpus file; ``.rmpc`` is appended when no suffix is given."""
    if "." not in name:
        name += ".rmpc"
    p = resources.files(__name__) / name
    if not p.is_file():
        raise FileNotFoundError(f"no corpus file {name!r}")
    return p


def load(name: str):
    """Parse a corpus model and return its system term."""
    from ..syntax import parse_model
    return parse_model(path(name).read_text())[0]


# (mu, gamma, eta) per participant of the shipped two-participant model
_TWOPC_RATES = [(1, 1.6, 0.4), (1.5, 0.5, 0.5)]


def twopc_source(m: int = 2, vote_rate: float = 2, decision_rate: float = 3) -> str:
    """Model text of two-phase commit with ``m`` participants.

    For ``m = 2`` this is the shipped ``twopc.rmpc``. Extra participants use
    mu = 1, gamma = 1, eta = 0.5. The state space grows exponentially in ``m``.
    """
    if m < 1:
        raise ValueError("need at least one participant")
    d = f"{decision_rate:g}"
    comps = [f"(<y{i},1>.0 + <n{i},1>.<abt,{d}>.0)" for i in range(1, m + 1)]
    counter = ".".join(f"<y{i},1>" for i in range(1, m + 1)) + f".<cmt,{d}>.0"
    ys = ",".join(f"y{i}" for i in range(1, m + 1))
    lines = [
        f"# Two-phase commit, {m} participant(s).",
        "def CoordP = " + " |[]| ".join(comps),
        f"def CoordPP = {counter}",
        f"def Coord = <vt,{vote_rate:g}>.(CoordP |[{ys}]| CoordPP)",
    ]
    system = "Coord"
    for i in range(1, m + 1):
        mu, g, e = _TWOPC_RATES[i - 1] if i <= len(_TWOPC_RATES) else (1, 1, 0.5)
        lines.append(f"def P{i} = <t{i},{mu:g}>.<vt,1>.(<y{i},{g:g}>.(<cmt,1>.0 + <abt,1>.0)"
                     f" + <n{i},{e:g}>.<abt,1>.0)")
        system += f" |[vt,cmt,abt,y{i},n{i}]| P{i}"
    lines.append(f"system = {system}")
    return "\n".join(lines) + "\n"
