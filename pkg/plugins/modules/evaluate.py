#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module computing segmentation metrics between two label files.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: evaluate
short_description: Segment-wise and sample-wise metrics between predicted and reference labels
version_added: "1.0.0"
description:
  - Computes F1@k, MCC, confusion counts, %TF, #FOG and episode detection counts per trial and pooled
  - Predictions are read from the C(pred) column; segment files contribute their final-stage rows
  - References are read from the C(label) column of a prediction file or a trial CSV
  - Trial CSV references drop their last label to align with displacement-based predictions
  - Sample-count mismatches between prediction and reference are errors
options:
    prediction:
        description:
            - Prediction or segment CSV
        required: true
        type: path
        aliases: ['pred']
    truth:
        description:
            - Reference CSV with a label column
        required: true
        type: path
    output:
        description:
            - Report JSON to write
        required: false
        type: path
    thresholds:
        description:
            - IoU thresholds for F1@k
        required: false
        default: [0.10, 0.25, 0.50, 0.75]
        type: list
        elements: float
author: gaitlab maintainers
requirements:
  - numpy
  - pandas
"""

RETURN = r"""
pooled:
    description: Metrics over all trials (F1 from summed counts, MCC from the summed confusion table)
    returned: success
    type: dict
trials:
    description: Metrics per trial id
    returned: success
    type: dict
robustness:
    description: False-positive episodes on trials without reference freezing
    returned: success
    type: dict
"""

EXAMPLES = """
- name: Evaluate a segmentation against its trial
  gaitlab.msgcn.evaluate:
    prediction: /runs/msgcn/S01_T01_pred.csv
    truth: /data/synth/S01_T01.csv
    output: /runs/msgcn/S01_T01_report.json
  delegate_to: localhost
  register: report

- name: Show the MCC
  debug:
    msg: "MCC {{ report.pooled.mcc }}"
"""

from ansible.module_utils.basic import AnsibleModule

from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_evaluate

    HAS_DEPS = True
except ImportError:
    HAS_DEPS = False


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        results.update(
            cmd_evaluate(
                params["prediction"],
                params["truth"],
                params["output"],
                tuple(params["thresholds"]),
            )
        )
    except MsgcnError as e:
        err = True
        results["msg"] = str(e)
        results["error"] = e.to_dict()
    return results, err


def main() -> None:
    spec = {
        "prediction": {"type": "path", "required": True, "aliases": ["pred"]},
        "truth": {"type": "path", "required": True},
        "output": {"type": "path", "required": False},
        "thresholds": {
            "type": "list",
            "elements": "float",
            "default": [0.10, 0.25, 0.50, 0.75],
        },
    }
    module = AnsibleModule(argument_spec=spec, supports_check_mode=False)

    if not HAS_DEPS:
        module.fail_json(msg="Required Python packages numpy and pandas are not installed")

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
