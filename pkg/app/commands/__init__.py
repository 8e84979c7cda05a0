from . import ingest, report, run

COMMANDS = (ingest, run, report)
