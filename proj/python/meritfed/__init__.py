# Copyright 2026 The MeritFed Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Merit-based federated aggregation: weight solving, attacks and simulated runs."""

from ._core import (
    MeritFedError,
    __version__,
    apply_update,
    attack_alie,
    attack_bf,
    attack_ipm,
    entropic_md_step,
    expand_config,
    meritfed_weights,
    preset_names,
    run,
    run_and_write,
    uniform_weights,
)

__all__ = [
    "MeritFedError",
    "__version__",
    "apply_update",
    "attack_alie",
    "attack_bf",
    "attack_ipm",
    "entropic_md_step",
    "expand_config",
    "meritfed_weights",
    "preset_names",
    "run",
    "run_and_write",
    "uniform_weights",
]
