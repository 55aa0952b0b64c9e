#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module running leave-one-subject-out cross-validation.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: crossval
short_description: Leave-one-subject-out evaluation of a segmentation network
version_added: "1.0.0"
description:
  - Trains one network per evaluation subject on all other subjects plus any enrichment subjects
  - Evaluates each network on its held-out subject in inference mode
  - Writes per-fold directories (checkpoint, loss.csv, predictions.csv, report.json)
  - Writes summary.json, summary.csv (mean and SD of F1@10/25/50/75 and MCC), subjects.csv and trial_outcomes.csv
  - Aborts with a leakage error if any fold would train on its evaluation data
options:
    manifest:
        description:
            - Dataset manifest file, or the directory holding manifest.json
            - Must list at least two evaluation subjects
        required: true
        type: path
    output_dir:
        description:
            - Run directory to create
            - Refused when it exists and is not empty unless I(force) is set
        required: true
        type: path
    force:
        description:
            - Write into a non-empty output directory
        required: false
        default: false
        type: bool
    graph:
        description:
            - Skeleton graph JSON; the embedded 9-marker graph is used when omitted
        required: false
        type: path
extends_documentation_fragment: gaitlab.msgcn.run_options
author: gaitlab maintainers
"""

RETURN = r"""
folds:
    description: Number of folds (evaluation subjects)
    returned: success
    type: int
    sample: 3
summary:
    description: Mean and population SD across folds of F1@k and MCC
    returned: success
    type: dict
    sample: {"variant": "ms-gcn", "f1_50_mean": 74.2, "f1_50_sd": 21.0, "mcc_mean": 82.7, "mcc_sd": 15.5, "folds": 3}
subjects:
    description: Per-subject rows (F1@50, MCC, detected episodes, false positives on non-FOG trials, #FOG, %TF)
    returned: success
    type: list
    elements: dict
robustness:
    description: False-positive episode counts on trials without expert-annotated freezing
    returned: success
    type: dict
"""

EXAMPLES = """
- name: Cross-validate the default MS-GCN with two folds in parallel
  gaitlab.msgcn.crossval:
    manifest: /data/synth
    output_dir: /runs/loso_msgcn
    jobs: 2
  delegate_to: localhost
  register: loso

- name: Show the summary
  debug:
    msg: "F1@50 {{ loso.summary.f1_50_mean | round(1) }} +/- {{ loso.summary.f1_50_sd | round(1) }}"
"""

import traceback

from ansible.module_utils.basic import AnsibleModule, missing_required_lib

try:
    import numpy  # noqa: F401

    HAS_NUMPY = True
    NUMPY_IMPORT_ERROR = None
except ImportError:
    HAS_NUMPY = False
    NUMPY_IMPORT_ERROR = traceback.format_exc()

from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import (
    run_argument_spec,
    run_config_from_params,
)
from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

if HAS_NUMPY:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_crossval


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    """
    Run cross-validation as configured by the module parameters.

    Returns:
        Tuple of (results dictionary, error flag)
    """
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        config = run_config_from_params(params)
        results.update(
            cmd_crossval(
                config,
                params["manifest"],
                params["output_dir"],
                params["force"],
                params["graph"],
            )
        )
    except MsgcnError as e:
        err = True
        results["msg"] = str(e)
        results["error"] = e.to_dict()
    return results, err


def main() -> None:
    spec = run_argument_spec()
    spec.update(
        {
            "manifest": {"type": "path", "required": True},
            "output_dir": {"type": "path", "required": True},
            "force": {"type": "bool", "default": False},
            "graph": {"type": "path", "required": False},
        }
    )
    module = AnsibleModule(argument_spec=spec, supports_check_mode=False)

    if not HAS_NUMPY:
        module.fail_json(msg=missing_required_lib("numpy"), exception=NUMPY_IMPORT_ERROR)

    try:
        results, err = run_action(module)
        if err:
            module.fail_json(**results)
        else:
            module.exit_json(**results)
    except Exception as e:
        module.fail_json(msg=f"Unexpected error: {str(e)}", error_type=type(e).__name__)


if __name__ == "__main__":
    main()
