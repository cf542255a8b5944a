import argparse
from typing import Callable, List, Optional

Handler = Callable[[argparse.Namespace], int]


class CommandRouter:
    """
    One CLI subcommand and the handler that runs it. Routers are declared in the
    controllers and included by main, which supplies the shared arguments.
    """

    def __init__(self, name: str, help: str = ""):
        self.name = name
        self.help = help
        self.handler: Optional[Handler] = None

    def command(self, func: Handler) -> Handler:
        self.handler = func
        return func

    def include(self, subparsers, parents: Optional[List[argparse.ArgumentParser]] = None) -> argparse.ArgumentParser:
        if self.handler is None:
            raise RuntimeError(f"command {self.name} has no handler")
        parser = subparsers.add_parser(self.name, help=self.help, parents=parents or [])
        parser.set_defaults(router=self)
        return parser
