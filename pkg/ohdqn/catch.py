#
# This file is part of ohdqn, a DQN with option heads for the game of Catch.
# Copyright (C) 2026 ohdqn developers.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/gpl-3.0.html>.
#

"""The game of Catch with white and grey balls.

A one pixel ball falls from the top of a 24x24 greyscale screen and a
2-pixel-wide paddle on the bottom row must move horizontally to catch it.
The ball type alternates every episode, white on even episodes and grey
on odd ones. Under :attr:`TransferMode.POSITIVE` catching either ball is
worth +1; under :attr:`TransferMode.NEGATIVE` a grey catch is worth +1 and
a white catch -1. Misses are worth 0.

The ball spawns one row above the screen and falls one row per step, so
every episode lasts exactly :data:`EPISODE_LENGTH` steps.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum, IntEnum

import numpy as np

logger = logging.getLogger(__name__)

#: int: Height and width of the screen.
GRID_SIZE = 24

#: int: Width of the paddle in pixels.
PADDLE_WIDTH = 2

#: int: Number of steps of every episode.
EPISODE_LENGTH = GRID_SIZE

#: int: Number of frames stacked into an observation.
FRAME_STACK = 4

#: int: Largest admissible column for the left end of the paddle.
MAX_PADDLE_LEFT = GRID_SIZE - PADDLE_WIDTH


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that already terminated."""


class TransferMode(Enum):
    """Reward scheme of the two subtasks."""

    POSITIVE = 'positive'
    NEGATIVE = 'negative'


class BallType(Enum):
    """Type of the falling ball, switched every episode."""

    WHITE = 'white'
    GREY = 'grey'

    @classmethod
    def for_episode(cls, episode_index):
        """Return the ball type of an episode: white on even indices, grey on odd ones."""
        return cls.WHITE if episode_index % 2 == 0 else cls.GREY


class Action(IntEnum):
    """Paddle actions."""

    LEFT = 0
    NOOP = 1
    RIGHT = 2


#: int: Number of actions.
N_ACTIONS = len(Action)


@dataclass(frozen=True)
class Palette:
    """Pixel intensities used when rendering a frame."""

    background: float = 0.0
    paddle: float = 1.0
    white: float = 1.0
    grey: float = 0.5

    def ball(self, ball_type):
        """Return the intensity of a ball type."""
        return self.white if ball_type is BallType.WHITE else self.grey


DEFAULT_PALETTE = Palette()


@dataclass(frozen=True)
class EnvState:
    """Complete state of a Catch episode.

    Attributes:
        ball_row (int): Row of the ball, ``-1`` before it enters the screen.
        ball_column (int): Column of the ball.
        paddle_left (int): Column of the left paddle pixel.
        ball_type (BallType): Type of the ball of this episode.
        step_count (int): Steps taken in this episode.
        mode (TransferMode): Reward scheme.
    """

    ball_row: int
    ball_column: int
    paddle_left: int
    ball_type: BallType
    step_count: int
    mode: TransferMode

    @property
    def terminal(self):
        """Return True once the ball reached the bottom row."""
        return self.step_count >= EPISODE_LENGTH

    @property
    def caught(self):
        """Return True if the paddle covers the ball column."""
        return self.paddle_left <= self.ball_column <= self.paddle_left + PADDLE_WIDTH - 1


def reward_for(mode, ball_type, caught):
    """Return the terminal reward of an episode.

    Args:
        mode (TransferMode): Reward scheme.
        ball_type (BallType): Type of the ball.
        caught (bool): Whether the paddle covered the ball on the last step.
    """
    if not caught:
        return 0.0
    if mode is TransferMode.NEGATIVE and ball_type is BallType.WHITE:
        return -1.0
    return 1.0


def render(state, palette=DEFAULT_PALETTE):
    """Render the screen of a state as a ``24 x 24`` array.

    The paddle is drawn first and the ball over it, so the ball type stays
    visible when the ball lands on the paddle.
    """
    frame = np.full((GRID_SIZE, GRID_SIZE), palette.background, dtype=np.float64)
    frame[GRID_SIZE - 1, state.paddle_left:state.paddle_left + PADDLE_WIDTH] = palette.paddle
    if 0 <= state.ball_row < GRID_SIZE:
        frame[state.ball_row, state.ball_column] = palette.ball(state.ball_type)
    return frame


def initial_state(mode, episode_index, rng):
    """Draw the initial state of an episode."""
    ball_column = int(rng.integers(GRID_SIZE))
    paddle_left = int(rng.integers(MAX_PADDLE_LEFT + 1))
    return EnvState(ball_row=-1, ball_column=ball_column, paddle_left=paddle_left,
                    ball_type=BallType.for_episode(episode_index), step_count=0, mode=mode)


def transition(state, action):
    """Advance the dynamics of a state by one step.

    Returns:
        tuple: The next state, the reward and the terminal flag.

    Raises:
        EpisodeFinishedError: If ``state`` is terminal.
        ValueError: If ``action`` is not a valid action.
    """
    if state.terminal:
        raise EpisodeFinishedError('cannot step a terminated episode, call reset() first.')

    action = Action(int(action))

    paddle_left = min(max(state.paddle_left + int(action) - 1, 0), MAX_PADDLE_LEFT)

    next_state = replace(state, ball_row=state.ball_row + 1, paddle_left=paddle_left,
                         step_count=state.step_count + 1)

    terminal = next_state.terminal
    reward = reward_for(state.mode, state.ball_type, next_state.caught) if terminal else 0.0

    return next_state, reward, terminal


def reset(mode, episode_index, rng, palette=DEFAULT_PALETTE):
    """Start an episode.

    Args:
        mode (TransferMode): Reward scheme.
        episode_index (int): Index of the episode, selects the ball type.
        rng (numpy.random.Generator): Source of the ball and paddle positions.
        palette (Palette, optional): Pixel intensities.

    Returns:
        tuple: The :class:`EnvState` and the initial observation, the first
        frame replicated :data:`FRAME_STACK` times.
    """
    state = initial_state(mode, episode_index, rng)
    frame = render(state, palette)
    observation = np.repeat(frame[np.newaxis], FRAME_STACK, axis=0)
    return state, observation


def step(state, observation, action, palette=DEFAULT_PALETTE):
    """Take an action.

    Args:
        state (EnvState): Current state.
        observation (numpy.ndarray): Current frame stack, oldest frame first.
        action (int): One of :class:`Action`.
        palette (Palette, optional): Pixel intensities.

    Returns:
        tuple: The next state, the next observation, the reward and the terminal flag.

    Raises:
        EpisodeFinishedError: If ``state`` is terminal.
    """
    next_state, reward, terminal = transition(state, action)
    frame = render(next_state, palette)
    next_observation = np.concatenate((observation[1:], frame[np.newaxis]), axis=0)
    return next_state, next_observation, reward, terminal


class Catch:
    """A Catch environment that keeps track of episodes and frame stacks.

    Example:

        .. doctest::

            >>> import numpy as np
            >>> from ohdqn.catch import Catch, TransferMode
            >>> env = Catch(TransferMode.NEGATIVE, np.random.default_rng(0))
            >>> state, observation = env.reset()
            >>> observation.shape
            (4, 24, 24)
            >>> state.ball_type
            <BallType.WHITE: 'white'>
    """

    def __init__(self, mode, rng, palette=DEFAULT_PALETTE):
        """Create an environment.

        Args:
            mode (TransferMode): Reward scheme.
            rng (numpy.random.Generator): Dedicated random stream.
            palette (Palette, optional): Pixel intensities.
        """
        self.mode = TransferMode(mode)
        self.rng = rng
        self.palette = palette

        #: int: Index of the next episode to start.
        self.episode_index = 0

        self.state = None
        self.observation = None

    def reset(self, episode_index=None):
        """Start the next episode (or the given one) and return its state and observation."""
        if episode_index is not None:
            self.episode_index = episode_index

        self.state, self.observation = reset(self.mode, self.episode_index, self.rng, self.palette)
        self.episode_index += 1

        return self.state, self.observation

    def step(self, action):
        """Take an action and return the next state, observation, reward and terminal flag."""
        if self.state is None:
            raise EpisodeFinishedError('no episode in progress, call reset() first.')

        self.state, self.observation, reward, terminal = step(self.state, self.observation,
                                                              action, self.palette)
        return self.state, self.observation, reward, terminal

    def __repr__(self):
        """Return the environment representation."""
        return f'Catch(mode={self.mode.value}, episode_index={self.episode_index})'


def moves_to_catch(ball_column, paddle_left):
    """Return the number of paddle moves needed to cover a column."""
    if ball_column < paddle_left:
        return paddle_left - ball_column
    right = paddle_left + PADDLE_WIDTH - 1
    if ball_column > right:
        return ball_column - right
    return 0


def should_catch(mode, ball_type):
    """Return True if catching this ball type is rewarded under the mode."""
    return reward_for(mode, ball_type, caught=True) > 0


def greedy_action(state):
    """Return the action of the hand-coded optimal policy.

    The paddle chases rewarded balls and steps out of the way of the white
    ball in negative-transfer mode.
    """
    left, right = state.paddle_left, state.paddle_left + PADDLE_WIDTH - 1

    if should_catch(state.mode, state.ball_type):
        if state.ball_column < left:
            return Action.LEFT
        if state.ball_column > right:
            return Action.RIGHT
        return Action.NOOP

    if not state.caught:
        return Action.NOOP
    return Action.RIGHT if state.ball_column <= GRID_SIZE // 2 else Action.LEFT


def play_out(state, policy=greedy_action):
    """Run a state policy until the episode terminates and return the episode reward."""
    total = 0.0
    while not state.terminal:
        state, reward, _ = transition(state, policy(state))
        total += reward
    return total


def optimal_episode_score(mode):
    """Return the expected per-episode score of the optimal policy.

    Every (ball column, paddle start) pair is played out for both ball
    types with :func:`greedy_action`; ball types contribute equally since
    they alternate between episodes.

    Returns:
        float: 1.0 for positive transfer and 0.5 for negative transfer.
    """
    mode = TransferMode(mode)

    per_type = []
    for ball_type in BallType:
        rewards = [
            play_out(EnvState(ball_row=-1, ball_column=column, paddle_left=paddle,
                              ball_type=ball_type, step_count=0, mode=mode))
            for column in range(GRID_SIZE)
            for paddle in range(MAX_PADDLE_LEFT + 1)
        ]
        per_type.append(float(np.mean(rewards)))

    return float(np.mean(per_type))
