import sys

from package.cli import RunConfig, build_parser, run

if __name__ == "__main__":
    parser = build_parser()
    args = parser.parse_args(namespace=RunConfig())
    sys.exit(run(args))
