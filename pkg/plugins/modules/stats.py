#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module assessing agreement between model and expert outcomes.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: stats
short_description: Correlation and regression of model against expert %TF and #FOG
version_added: "1.0.0"
description:
  - Reads the per-trial outcomes table written by the crossval module
  - Only trials with expert-annotated freezing are considered
  - Reports Pearson r with a 95% Fisher interval and a verbal strength (strong, moderately strong, fair, poor)
  - Reports the least-squares slope and intercept with 95% t intervals; a slope interval excluding zero is statistically significant
options:
    outcomes:
        description:
            - Per-trial outcomes CSV (trial_outcomes.csv)
        required: true
        type: path
    output:
        description:
            - Report JSON to write
        required: false
        type: path
author: gaitlab maintainers
requirements:
  - numpy
  - scipy
  - pandas
"""

RETURN = r"""
trials:
    description: Number of trials with expert-annotated freezing used
    returned: success
    type: int
percent_tf:
    description: Agreement of percentage time frozen (correlation and regression blocks)
    returned: success
    type: dict
nfog:
    description: Agreement of the number of freezing episodes
    returned: success
    type: dict
"""

EXAMPLES = """
- name: Agreement statistics of a cross-validation run
  gaitlab.msgcn.stats:
    outcomes: /runs/loso_msgcn/trial_outcomes.csv
    output: /runs/loso_msgcn/stats.json
  delegate_to: localhost
"""

from ansible.module_utils.basic import AnsibleModule

from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_stats

    HAS_DEPS = True
except ImportError:
    HAS_DEPS = False


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    results: Dict[str, Any] = {"changed": False}
    err = False
    try:
        results.update(cmd_stats(module.params["outcomes"], module.params["output"]))
    except MsgcnError as e:
        err = True
        results["msg"] = str(e)
        results["error"] = e.to_dict()
    return results, err


def main() -> None:
    spec = {
        "outcomes": {"type": "path", "required": True},
        "output": {"type": "path", "required": False},
    }
    module = AnsibleModule(argument_spec=spec, supports_check_mode=False)

    if not HAS_DEPS:
        module.fail_json(msg="Required Python packages numpy, scipy and pandas are not installed")

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
