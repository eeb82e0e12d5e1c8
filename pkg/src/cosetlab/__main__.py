from cosetlab.cli import run

run()
