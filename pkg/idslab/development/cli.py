"""ids-lab CLI - run experiments, render reports and check known values"""

import sys
import argparse
from pathlib import Path
from dotenv import load_dotenv

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_INTEGRITY = 4


def find_project_root() -> Path:
    """Find the project root by looking for common markers"""
    cwd = Path.cwd()

    project_root_files = ["pyproject.toml", ".env"]

    # Check current directory and parents
    for path in [cwd] + list(cwd.parents):
        for marker in project_root_files:
            if (path / marker).exists():
                return path

    return cwd


def _run(args, console) -> int:
    from rich.markup import escape
    from rich.table import Table

    from idslab.development.runner import run

    result = run(args.config, output_dir=args.output_dir)

    table = Table(title=f"Run {result.manifest.config_hash[:12]} ({result.manifest.kind})")
    table.add_column("Experiment", style="cyan")
    table.add_column("Passed")
    table.add_column("Wall time [s]", justify="right")
    table.add_column("Failed checks")
    for record in result.manifest.records:
        failed = [name for name, ok in record.checks.items() if not ok]
        if record.error is not None:
            failed.append(f"{record.error.type}: {record.error.message}")
        table.add_row(
            record.kind,
            "[green]yes[/green]" if record.passed else "[red]no[/red]",
            f"{result.wall_times.get(record.kind, 0.0):.3f}",
            escape(", ".join(failed)) or "-",
        )
    console.print(table)
    console.print(f"Manifest: {result.manifest_path}")
    return EXIT_OK if result.passed else EXIT_FAILED


def _report(args) -> int:
    from idslab.development.report import render_report

    sys.stdout.write(render_report(args.manifest))
    return EXIT_OK


def _selftest(console) -> int:
    from rich.markup import escape
    from rich.table import Table

    from idslab.development.selftest import run_selftest

    results = run_selftest()
    table = Table(title="Self-test")
    table.add_column("Module", style="cyan")
    table.add_column("Check")
    table.add_column("Result")
    table.add_column("Detail")
    for r in results:
        table.add_row(r.module, r.name, "[green]pass[/green]" if r.passed else "[red]FAIL[/red]", escape(r.detail))
    console.print(table)
    failed = sum(not r.passed for r in results)
    if failed:
        console.print(f"[red]{failed} of {len(results)} checks failed[/red]")
        return EXIT_FAILED
    console.print(f"[green]All {len(results)} checks passed[/green]")
    return EXIT_OK


def main(argv=None) -> None:
    """Main CLI entry point with subcommands"""
    # Find project root and load environment variables from there
    project_root = find_project_root()
    dotenv_path = project_root / ".env"
    load_dotenv(dotenv_path)

    parser = argparse.ArgumentParser(
        prog="ids-lab",
        description="Integrated density of states laboratory for random lattice operators",
        epilog="Run 'ids-lab <command> --help' for more information on a command.",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    run_parser = subparsers.add_parser("run", help="Run the experiment described by a config file")
    run_parser.add_argument("config", type=str, help="Path to a .toml or .json experiment config")
    run_parser.add_argument(
        "--output-dir",
        type=str,
        default=None,
        help="Root of the run directories (default: IDSLAB_OUTPUT_DIR or the config's output_dir)",
    )

    report_parser = subparsers.add_parser("report", help="Render a run manifest as plain-text tables")
    report_parser.add_argument("manifest", type=str, help="Path to a manifest.json")

    subparsers.add_parser("selftest", help="Check the known closed-form values of every module")
    subparsers.add_parser("version", help="Print the package version")

    args = parser.parse_args(argv)

    # Show help if no command specified
    if not args.command:
        parser.print_help()
        sys.exit(EXIT_USAGE)

    from rich.console import Console
    from rich.markup import escape

    from idslab.exceptions import IntegrityError, ResourceLimitError, UsageError

    console = Console(stderr=args.command == "report")
    try:
        if args.command == "run":
            code = _run(args, console)
        elif args.command == "report":
            code = _report(args)
        elif args.command == "selftest":
            code = _selftest(console)
        else:
            from idslab import __version__

            print(__version__)
            code = EXIT_OK
    except UsageError as e:
        where = f" (field: {e.field_path})" if e.field_path else ""
        console.print(f"[red]Usage error{where}: {escape(e.message)}[/red]")
        code = EXIT_USAGE
    except ResourceLimitError as e:
        console.print(f"[red]Resource limit '{e.ceiling}' exceeded: {escape(e.message)}[/red]")
        code = EXIT_RESOURCE
    except IntegrityError as e:
        console.print(f"[red]Integrity error: {escape(e.message)}[/red]")
        code = EXIT_INTEGRITY

    sys.exit(code)


if __name__ == "__main__":
    main()
