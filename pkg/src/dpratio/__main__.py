from dpratio.cli import run

run()
