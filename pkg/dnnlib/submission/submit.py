# Copyright (c) 2019, NVIDIA Corporation. All rights reserved.
#
# This work is made available under the Nvidia Source Code License-NC.
# To view a copy of this license, visit
# https://nvlabs.github.io/stylegan2/license.html

"""Submit a function to be run locally, either inside a numbered run directory or as a diagnostic."""

import copy
import inspect
import os
import pprint
import re
import time

from enum import Enum

from .. import util


class SubmitTarget(Enum):
    """Where the run function is launched.

    LOCAL: inside a fresh results/NNNNN-<desc> run dir, logging to log.txt.
    DIAGNOSTIC: in the current process without a run dir (generate, score, render).
    """
    LOCAL = 1
    DIAGNOSTIC = 17


def default_num_workers() -> int:
    """Worker count from GEOSPM_NUM_WORKERS, or 1."""
    value = os.environ.get("GEOSPM_NUM_WORKERS", "").strip()
    if value == "":
        return 1
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError("GEOSPM_NUM_WORKERS must be a positive integer, got %r" % value)
    return n


class SubmitConfig(util.EasyDict):
    """Strongly typed config dict needed to submit runs.

    Attributes:
        run_dir_root: Directory holding the numbered run dirs.
        run_desc: Description of the run. Will be used in the run dir name.
        submit_target: Submit target enum value.
        num_workers: Number of worker threads used by the run (accumulation chunks, sweep jobs).
        quiet: Suppress the run dir banner.
        run_id: Automatically populated value during submit.
        run_name: Automatically populated value during submit.
        run_dir: Automatically populated value during submit.
        run_func_name: Automatically populated value during submit.
        run_func_kwargs: Automatically populated value during submit.
    """

    def __init__(self):
        super().__init__()

        # run (set these)
        self.run_dir_root = "results"
        self.run_desc = ""

        # submit (set these)
        self.submit_target = SubmitTarget.LOCAL
        self.num_workers = default_num_workers()
        self.quiet = False

        # (automatically populated)
        self.run_id = None
        self.run_name = None
        self.run_dir = None
        self.run_func_name = None
        self.run_func_kwargs = None


def make_run_dir_path(*paths):
    """Make a path/filename that resides under the current submit run_dir.

    Outside a run (or in a diagnostic run) the base directory is the current
    working directory.
    """
    import dnnlib
    if (dnnlib.submit_config is None) or (not dnnlib.submit_config.run_dir):
        return os.path.join(os.getcwd(), *paths)
    return os.path.join(dnnlib.submit_config.run_dir, *paths)


def _create_run_dir_local(submit_config: SubmitConfig) -> str:
    """Create a new run dir with increasing ID number at the start."""
    run_dir_root = submit_config.run_dir_root
    util.ensure_dir(run_dir_root)

    submit_config.run_id = _get_next_run_id_local(run_dir_root)
    submit_config.run_name = "{0:05d}-{1}".format(submit_config.run_id, submit_config.run_desc)
    run_dir = os.path.join(run_dir_root, submit_config.run_name)

    if os.path.exists(run_dir):
        raise RuntimeError("The run dir already exists! ({0})".format(run_dir))

    os.makedirs(run_dir)
    return run_dir


def _get_next_run_id_local(run_dir_root: str) -> int:
    """Next free run id: one past the largest number leading a directory name under run_dir_root."""
    dir_names = [d for d in os.listdir(run_dir_root) if os.path.isdir(os.path.join(run_dir_root, d))]
    r = re.compile("^\\d+")
    run_id = 0

    for dir_name in dir_names:
        m = r.match(dir_name)
        if m is not None:
            run_id = max(run_id, int(m.group()) + 1)

    return run_id


def _populate_run_dir(submit_config: SubmitConfig, run_dir: str) -> None:
    """Record the submit config inside the run dir."""
    with open(os.path.join(run_dir, "submit_config.txt"), "w") as f:
        pprint.pprint(submit_config, stream=f, indent=4, width=200, compact=False)


def run_wrapper(submit_config: SubmitConfig):
    """Wrap the actual run function call for handling logging, exceptions, typing, etc.
    Returns whatever the run function returns."""
    is_local = submit_config.submit_target == SubmitTarget.LOCAL

    # when running in a run dir, redirect stderr to stdout, log stdout to a file, and force flushing
    if is_local:
        logger = util.Logger(file_name=os.path.join(submit_config.run_dir, "log.txt"), file_mode="w", should_flush=True)
    else:
        logger = util.Logger(file_name=None, should_flush=True)

    import dnnlib
    dnnlib.submit_config = submit_config

    result = None
    try:
        if is_local:
            print("dnnlib: Running {0}() with {1} worker(s)...".format(submit_config.run_func_name, submit_config.num_workers))
        start_time = time.time()

        run_func_obj = util.get_obj_by_name(submit_config.run_func_name)
        assert callable(run_func_obj)
        sig = inspect.signature(run_func_obj)
        if 'submit_config' in sig.parameters:
            result = run_func_obj(submit_config=submit_config, **submit_config.run_func_kwargs)
        else:
            result = run_func_obj(**submit_config.run_func_kwargs)

        if is_local:
            print("dnnlib: Finished {0}() in {1}.".format(submit_config.run_func_name, util.format_time(time.time() - start_time)))
    finally:
        if is_local:
            open(os.path.join(submit_config.run_dir, "_finished.txt"), "w").close()

        dnnlib.RunContext.get().close()
        dnnlib.submit_config = None
        logger.close()

    return result


def _prepare(submit_config: SubmitConfig, run_func_name: str, run_func_kwargs: dict) -> SubmitConfig:
    submit_config = copy.deepcopy(submit_config)
    if (submit_config.num_workers is None) or (submit_config.num_workers < 1):
        raise RuntimeError("submit_config.num_workers must be set to a positive value")
    submit_config.run_func_name = run_func_name
    submit_config.run_func_kwargs = run_func_kwargs
    return submit_config


def submit_run(submit_config: SubmitConfig, run_func_name: str, **run_func_kwargs):
    """Create a run dir, record the config in it, and launch the run locally."""
    submit_config = _prepare(submit_config, run_func_name, run_func_kwargs)
    submit_config.submit_target = SubmitTarget.LOCAL

    valid_desc_regex = "^[a-zA-Z0-9][a-zA-Z0-9_.-]*$"
    if not re.match(valid_desc_regex, submit_config.run_desc):
        raise RuntimeError("Invalid run_desc.  Must be accepted by the following regex: " + valid_desc_regex + ", got " + repr(submit_config.run_desc))

    submit_config.run_dir = _create_run_dir_local(submit_config)
    _populate_run_dir(submit_config, submit_config.run_dir)
    if not submit_config.quiet:
        print("Local submit - run_dir: %s" % submit_config.run_dir, flush=True)
    return run_wrapper(submit_config)


def submit_diagnostic(submit_config: SubmitConfig, run_func_name: str, **run_func_kwargs):
    """Launch a run without creating a run directory."""
    submit_config = _prepare(submit_config, run_func_name, run_func_kwargs)
    submit_config.submit_target = SubmitTarget.DIAGNOSTIC
    submit_config.run_dir = ""
    return run_wrapper(submit_config)
