# Learned seed-selection policies.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

from slcim.rl.policy import (PolicyParams, PolicyError, PolicyFileError, ShapeMismatchError,
                             policy_forward, value_forward, save_params, load_params)
from slcim.rl.ppo import (PPOConfig, SelfPlayConfig, Trajectory, Batch, PolicyAgent,
                          TrainingError, TrainingResult, CurvePoint, DRL, ppo_losses, ppo_update,
                          collect_rollouts, train_loop, train_agent, write_learning_curve_csv)
