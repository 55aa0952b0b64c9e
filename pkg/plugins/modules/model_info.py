#!/usr/bin/python
# -*- coding: utf-8 -*-
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)
"""
Ansible module describing a checkpoint, a skeleton graph or a configuration.
"""

from __future__ import absolute_import, division, print_function

from typing import Any, Dict, Tuple

__metaclass__ = type

DOCUMENTATION = """
---
module: model_info
short_description: Describe a checkpoint, skeleton graph or network configuration
version_added: "1.0.0"
description:
  - With I(checkpoint), returns its format version, configuration, graph hash, parameter count and metadata
  - With I(graph) or I(show_graph), returns the skeleton graph and its hash
  - Otherwise returns the parameter count, stage count and receptive field of the configured network
  - Never changes anything
options:
    checkpoint:
        description:
            - Checkpoint to describe
        required: false
        type: path
    graph:
        description:
            - Skeleton graph JSON to describe
        required: false
        type: path
    show_graph:
        description:
            - Describe the embedded default graph
        required: false
        default: false
        type: bool
extends_documentation_fragment: gaitlab.msgcn.run_options
author: gaitlab maintainers
"""

RETURN = r"""
parameters:
    description: Trainable parameter count
    returned: when describing a checkpoint or configuration
    type: int
    sample: 752270
receptive_field:
    description: Receptive field in samples of one stage
    returned: when describing a configuration
    type: int
    sample: 2047
graph:
    description: Skeleton graph nodes, edges and center
    returned: when describing a graph
    type: dict
graph_hash:
    description: SHA-256 of the canonical graph JSON
    returned: when describing a graph or checkpoint
    type: str
"""

EXAMPLES = """
- name: Parameter count of the default network
  gaitlab.msgcn.model_info:
  register: info

- name: Describe a checkpoint
  gaitlab.msgcn.model_info:
    checkpoint: /runs/msgcn/model.msgcn
"""

from ansible.module_utils.basic import AnsibleModule

from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import (
    run_argument_spec,
    run_config_from_params,
)
from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import MsgcnError

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.pipeline import cmd_inspect

    HAS_DEPS = True
except ImportError:
    HAS_DEPS = False


def run_action(module: AnsibleModule) -> Tuple[Dict[str, Any], bool]:
    results: Dict[str, Any] = {"changed": False}
    err = False
    params = module.params
    try:
        config = run_config_from_params(params)
        results.update(
            cmd_inspect(config, params["checkpoint"], params["graph"], params["show_graph"])
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
            "checkpoint": {"type": "path", "required": False},
            "graph": {"type": "path", "required": False},
            "show_graph": {"type": "bool", "default": False},
        }
    )
    module = AnsibleModule(
        argument_spec=spec,
        supports_check_mode=True,
        mutually_exclusive=[("checkpoint", "graph"), ("checkpoint", "show_graph")],
    )

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
