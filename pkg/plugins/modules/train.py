#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module training one segmentation network on a dataset.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: train
short_description: Train an MS-GCN (or ablation variant) on every trial of a dataset
version_added: "1.0.0"
description:
  - Trains with Adam on the multi-stage cross entropy plus truncated smoothing objective
  - Enrichment subjects of the manifest are included in the training set
  - Writes the final-epoch checkpoint (model.msgcn), the per-epoch loss trace (loss.csv) and config.json
  - A non-finite loss or gradient aborts training and reports the partial loss trace
options:
    manifest:
        description:
            - Dataset manifest file, or the directory holding manifest.json
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
            - Skeleton graph JSON with nodes, edges and center
            - The embedded 9-marker lower-body graph is used when omitted
        required: false
        type: path
extends_documentation_fragment: gaitlab.msgcn.run_options
author: gaitlab maintainers
"""

RETURN = r"""
checkpoint:
    description: Path of the written checkpoint
    returned: success
    type: str
    sample: "/runs/msgcn/model.msgcn"
parameters:
    description: Number of trainable parameters
    returned: success
    type: int
    sample: 752270
epochs:
    description: Number of completed epochs
    returned: success
    type: int
    sample: 100
initial_loss:
    description: Mean training loss of the first epoch
    returned: success
    type: float
final_loss:
    description: Mean training loss of the last epoch
    returned: success
    type: float
error:
    description: Structured error with type, exit code and context (including the partial loss trace on divergence)
    returned: failure
    type: dict
"""

EXAMPLES = """
- name: Train the default network for 100 epochs
  gaitlab.msgcn.train:
    manifest: /data/synth
    output_dir: /runs/msgcn
    seed: 1
  delegate_to: localhost

- name: Train a single-stage ST-GCN with a higher learning rate
  gaitlab.msgcn.train:
    manifest: /data/synth/manifest.json
    output_dir: /runs/stgcn
    model:
      variant: st-gcn
    train:
      epochs: 50
      lr: 0.001
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
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_train


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    """
    Train a network as configured by the module parameters.

    Returns:
        Tuple of (results dictionary, error flag)
    """
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        config = run_config_from_params(params)
        results.update(
            cmd_train(
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
