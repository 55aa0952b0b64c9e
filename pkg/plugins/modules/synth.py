#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module generating a synthetic freezing-of-gait dataset.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: synth
short_description: Generate a synthetic gait dataset with annotated freezing episodes
version_added: "1.0.0"
description:
  - Writes one trial CSV plus sidecar JSON per synthetic recording and a dataset manifest
  - Functional gait is a sinusoidal stride cycle; freezing episodes either tremble in the 3-8 Hz band or stay still
  - Output depends only on the seed and the C(synth) configuration section
  - A configuration snapshot (config.json) is written next to the trials
options:
    output_dir:
        description:
            - Dataset directory to create
            - Refused when it exists and is not empty unless I(force) is set
        required: true
        type: path
    force:
        description:
            - Write into a non-empty output directory
        required: false
        default: false
        type: bool
    enrichment_subjects:
        description:
            - Subject ids flagged as training-only in the manifest
        required: false
        default: []
        type: list
        elements: str
extends_documentation_fragment: gaitlab.msgcn.run_options
author: gaitlab maintainers
"""

RETURN = r"""
manifest:
    description: Path of the written dataset manifest
    returned: success
    type: str
    sample: "/data/synth/manifest.json"
trials:
    description: Number of generated trials
    returned: success
    type: int
    sample: 12
fog_trials:
    description: Number of trials with at least one freezing episode
    returned: success
    type: int
    sample: 6
subjects:
    description: Evaluation subject ids in manifest order
    returned: success
    type: list
    elements: str
    sample: ["S01", "S02", "S03"]
"""

EXAMPLES = """
- name: Generate 3 subjects with 4 trials each
  gaitlab.msgcn.synth:
    output_dir: /data/synth
    seed: 7
    synth:
      subjects: 3
      trials_per_subject: 4
  delegate_to: localhost

- name: Dataset without freezing
  gaitlab.msgcn.synth:
    output_dir: /data/synth_fg
    force: true
    synth:
      fog_rate: 0
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

from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import (
    run_argument_spec,
    run_config_from_params,
)
from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

if HAS_NUMPY:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_synth


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    """
    Generate the dataset described by the module parameters.

    Returns:
        Tuple of (results dictionary, error flag)
    """
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        config = run_config_from_params(params)
        results.update(
            cmd_synth(
                config,
                params["output_dir"],
                params["force"],
                params["enrichment_subjects"],
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
            "output_dir": {"type": "path", "required": True},
            "force": {"type": "bool", "default": False},
            "enrichment_subjects": {"type": "list", "elements": "str", "default": []},
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
