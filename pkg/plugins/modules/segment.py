#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module segmenting one trial with a trained checkpoint.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: segment
short_description: Predict per-sample freezing-of-gait labels for one trial
version_added: "1.0.0"
description:
  - Loads a checkpoint and runs every stage in inference mode on the trial's displacement features
  - Writes one CSV row per stage and sample with class probabilities, argmax label and reference label
  - The last stage's rows are marked final
options:
    checkpoint:
        description:
            - Checkpoint written by the train or crossval modules
        required: true
        type: path
    trial:
        description:
            - Trial CSV (its sidecar JSON must sit next to it)
        required: true
        type: path
    output:
        description:
            - Prediction CSV to write
        required: true
        type: path
    graph:
        description:
            - Skeleton graph JSON; must match the graph the checkpoint was trained on
        required: false
        type: path
author: gaitlab maintainers
requirements:
  - numpy
  - pandas
  - packaging
"""

RETURN = r"""
output:
    description: Path of the written prediction CSV
    returned: success
    type: str
trial_id:
    description: Segmented trial
    returned: success
    type: str
    sample: "S01_T01"
samples:
    description: Number of predicted samples (trial length minus one)
    returned: success
    type: int
stages:
    description: Number of stages in the prediction file
    returned: success
    type: int
    sample: 5
percent_tf:
    description: Percentage of samples predicted as freezing by the final stage
    returned: success
    type: float
nfog:
    description: Number of freezing episodes predicted by the final stage
    returned: success
    type: int
"""

EXAMPLES = """
- name: Segment a trial
  gaitlab.msgcn.segment:
    checkpoint: /runs/msgcn/model.msgcn
    trial: /data/synth/S01_T01.csv
    output: /runs/msgcn/S01_T01_pred.csv
  delegate_to: localhost
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

from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

if HAS_NUMPY:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_segment


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        results.update(
            cmd_segment(params["checkpoint"], params["trial"], params["output"], params["graph"])
        )
    except MsgcnError as e:
        err = True
        results["msg"] = str(e)
        results["error"] = e.to_dict()
    return results, err


def main() -> None:
    spec = {
        "checkpoint": {"type": "path", "required": True},
        "trial": {"type": "path", "required": True},
        "output": {"type": "path", "required": True},
        "graph": {"type": "path", "required": False},
    }
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
