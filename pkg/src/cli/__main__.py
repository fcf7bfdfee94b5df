from src.cli.main import run

raise SystemExit(run())
