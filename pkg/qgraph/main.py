"""
qgraph command-line tool.

    qgraph spectrum --config star.json --out results/
    qgraph verify   --config star.json --out results/ --identity tf2 --nmax 12
    qgraph check    --config star.json --out results/

Exit codes: 0 success, 1 computation or identity failure, 2 configuration error.
"""

import argparse
import json
import math
import sys
import uuid
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from qgraph.config import settings
from qgraph.core.boundary import canonicalize
from qgraph.core.identities import IdentitySuite
from qgraph.core.scattering import SMatrixEvaluator
from qgraph.core.spectrum import SpectralSolver, Spectrum, weyl_check
from qgraph.core.testfunctions import GaussianTestFunction, TestFunction, make_test_function
from qgraph.core.traceformula import ConvergenceRow, TraceFormula, TraceIdentity
from qgraph.exceptions import (
    IdentityCheckFailed,
    QGraphError,
    TailNotControlled,
    capture_exception,
    error_context,
    exit_code_for,
)
from qgraph.logging import add_metadata, configure_logging, get_logger, get_run_id, set_run_id
from qgraph.schemas.job import Job, load_job
from qgraph.schemas.reports import (
    CheckDocument,
    RunMetadata,
    SpectrumDocument,
    VerifyDocument,
    read_spectrum,
    write_convergence_csv,
    write_json,
    write_spectrum_csv,
    write_weyl_csv,
)

logger = get_logger("main", metadata={"component": "main"})


class Command(str, Enum):
    """Sub-commands of the qgraph tool"""

    SPECTRUM = "spectrum"
    VERIFY = "verify"
    CHECK = "check"


class Workspace:
    """Graph, boundary conditions and solvers of one job."""

    def __init__(self, job: Job):
        self.job = job
        self.config = job.config
        self.graph = job.document.to_graph()
        self.bc = job.document.to_boundary(self.graph)
        self.canonical = canonicalize(self.bc)
        self.evaluator = SMatrixEvaluator(self.graph, self.canonical)
        self.solver = SpectralSolver(self.evaluator)
        self.trace = TraceFormula(self.evaluator, self.solver)

    def describe_boundary(self) -> Dict[str, object]:
        boundary = self.job.document.boundary
        return {"type": boundary.type, "params": boundary.params, "canonical": self.canonical.to_dict()}

    def spectrum(self, needs: Sequence[TestFunction] = ()) -> Spectrum:
        """
        Stored spectrum when the job names one, otherwise a fresh solve.

        A fresh solve is extended beyond k_max until the tail of every test
        function in needs is controlled.

        Raises:
            TailNotControlled: no K_max up to QGRAPH_KMAX_LIMIT suffices
        """
        if self.config.spectrum is not None:
            path = self.job.resolve(self.config.spectrum)
            logger.info("Reusing stored spectrum", metadata={"path": str(path)})
            return read_spectrum(path)

        k_max = self.config.k_max
        for h in needs:
            required = self.trace.required_kmax(h)
            if math.isinf(required):
                limit = settings.QGRAPH_KMAX_LIMIT
                raise TailNotControlled(
                    k_max=limit, bound=self.trace.spectral_tail_bound(h, limit), tolerance=settings.QGRAPH_TAIL_TOL
                )
            if required > k_max:
                logger.info(
                    "Extending K_max for tail control",
                    metadata={"requested": k_max, "required": required, "test_function": h.name},
                )
                k_max = required * 1.001
        return self.solver.compute(k_max)


def _run_metadata(command: Command) -> RunMetadata:
    return RunMetadata(run_id=get_run_id() or str(uuid.uuid4()), command=command.value)


def run_spectrum(workspace: Workspace, out: Path) -> List[Path]:
    config = workspace.config
    spectrum = workspace.spectrum()
    Ks = np.linspace(spectrum.k_max / config.weyl_points, spectrum.k_max, config.weyl_points)
    weyl = weyl_check(spectrum, workspace.graph.total_length, Ks)
    document = SpectrumDocument(
        run=_run_metadata(Command.SPECTRUM),
        graph=workspace.graph.describe(),
        boundary=workspace.describe_boundary(),
        spectrum=spectrum,
        weyl=weyl,
    )
    return [
        write_spectrum_csv(spectrum, out / "spectrum.csv"),
        write_json(document, out / "spectrum.json"),
        write_weyl_csv(weyl, out / "weyl.csv"),
    ]


def run_verify(workspace: Workspace, out: Path) -> List[Path]:
    config = workspace.config
    trace = workspace.trace
    document = VerifyDocument(
        run=_run_metadata(Command.VERIFY), identity=config.identity, graph=workspace.graph.describe()
    )

    if config.identity in (TraceIdentity.TF1, TraceIdentity.TF2):
        h = make_test_function(config.test_fn.value, t=config.t, a=config.a)
        spectrum = workspace.spectrum([h])
        report = trace.evaluate_tf(spectrum, h, config.n_max, config.identity)
        document.reports = [report]
        document.warnings = list(report.warnings)
        rows, cutoff = report.convergence, "n"
    elif config.identity == TraceIdentity.TF3:
        spectrum = workspace.spectrum([GaussianTestFunction(min(config.t_values))])
        document.reports = trace.heat_trace_series(spectrum, config.t_values, config.n_max)
        document.warnings = sorted({w for report in document.reports for w in report.warnings})
        rows = [
            ConvergenceRow(cutoff=report.test_function["params"]["t"], lhs=report.lhs.re, rhs=report.rhs.re,
                           residual=report.residual, tail_bound=report.orbit_tail_bound)
            for report in document.reports
        ]
        cutoff = "t"
    else:
        spectrum = workspace.spectrum([GaussianTestFunction(settings.QGRAPH_HEAT_T_MIN)])
        document.asymptotics = trace.heat_asymptotics(spectrum)
        rows, cutoff = document.asymptotics.samples, "t"

    return [write_json(document, out / "report.json"), write_convergence_csv(rows, out / "convergence.csv", cutoff)]


def run_check(workspace: Workspace, out: Path) -> List[Path]:
    config = workspace.config
    suite = IdentitySuite(workspace.evaluator, samples=config.samples, seed=config.seed)
    spectrum = h = None
    if config.pretrace:
        h = make_test_function(config.test_fn.value, t=config.t, a=config.a)
        spectrum = workspace.spectrum([h])
    report = suite.run(spectrum=spectrum, h=h, pretrace_l_max=config.pretrace_l_max)
    document = CheckDocument(
        run=_run_metadata(Command.CHECK),
        graph=workspace.graph.describe(),
        passed=report.passed,
        failures=report.failures,
        identities=report,
    )
    path = write_json(document, out / "identities.json")
    if not report.passed:
        raise IdentityCheckFailed(report.failures, str(path))
    return [path]


COMMANDS: Dict[Command, Callable[[Workspace, Path], List[Path]]] = {
    Command.SPECTRUM: run_spectrum,
    Command.VERIFY: run_verify,
    Command.CHECK: run_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgraph", description="Spectra and trace formulae of quantum graphs")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(command.value)
        sub.add_argument("--config", required=True, help="Job or graph JSON file")
        sub.add_argument("--out", default=None, help="Output directory")
        sub.add_argument("--kmax", type=float, default=None, dest="k_max")
        sub.add_argument("--nmax", type=int, default=None, dest="n_max")
        sub.add_argument("--t", type=float, default=None)
        sub.add_argument("--test-fn", choices=["gaussian", "cauchy"], default=None, dest="test_fn")
        sub.add_argument(
            "--identity", choices=["tf1", "tf2", "tf3", "heat", "heat-asymptotics"], default=None
        )
        sub.add_argument("--spectrum", default=None, help="Stored spectrum.json to reuse")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    run_id = str(uuid.uuid4())
    set_run_id(run_id)
    command = Command(args.command)
    add_metadata(command=command.value)

    overrides = {
        "k_max": args.k_max,
        "n_max": args.n_max,
        "t": args.t,
        "test_fn": args.test_fn,
        "identity": args.identity,
        "spectrum": args.spectrum,
    }
    try:
        with error_context(command=command.value, config=args.config):
            job = load_job(args.config, overrides)
            job.config.apply_tolerances()
            out = Path(args.out or job.config.out or ".")
            out.mkdir(parents=True, exist_ok=True)
            logger.info("Starting run", metadata={"config": args.config, "out": str(out)})
            files = COMMANDS[command](Workspace(job), out)
    except QGraphError as exc:
        capture_exception(exc, reraise=False, message=f"{command.value} failed")
        print(f"qgraph {command.value}: error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        capture_exception(exc, reraise=False, message=f"{command.value} failed unexpectedly", log_level="exception")
        print(f"qgraph {command.value}: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)

    print(json.dumps({"run_id": run_id, "files": [str(path) for path in files]}))
    logger.info("Run finished", metadata={"files": len(files)})
    return 0


if __name__ == "__main__":
    sys.exit(main())
