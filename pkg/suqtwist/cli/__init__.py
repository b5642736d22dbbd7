from .core import (main_runner, args_runner, get_default_argparser,
                   get_default_argparser_with_base_opts)
