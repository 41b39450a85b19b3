"""Learning agent: TD(lambda) and Q-learning on a five-state chain.

Moving right reaches a reward of 1 at the end; moving left from the start ends
at once with 0.2. With discount 0.5 the best policy goes left in state 0 and
right everywhere else. Both learners recover it.

Run: python3 demos/05_learning_agent.py
"""

import numpy as np

from approxmem.agent import LearningParams, QTable, q_learning_step, select_action, td_lambda_step


def chain(s, a):
    if a == 1:
        return s + 1, (1.0 if s == 3 else 0.0)
    return (4, 0.2) if s == 0 else (s - 1, 0.0)


def learn(step, seed, episodes=3000):
    p = LearningParams(alpha=0.5, gamma=0.5, lam=0.8)
    t, rng, eps = QTable(5, 2), np.random.default_rng(seed), 1.0
    for _ in range(episodes):
        t.reset_traces()
        s = int(rng.integers(4))
        a = select_action(t, s, eps, rng)
        while True:
            s2, r = chain(s, a)
            a2 = 0 if s2 == 4 else select_action(t, s2, eps, rng)
            step(t, s, a, r, s2, a2, p, s2 == 4)
            if s2 == 4:
                break
            s, a = s2, a2
        eps *= 0.998
    return t


td = learn(lambda t, s, a, r, s2, a2, p, d: td_lambda_step(t, s, a, r, s2, a2, p, terminal=d), seed=0)
ql = learn(lambda t, s, a, r, s2, a2, p, d: q_learning_step(t, s, a, r, s2, p, terminal=d), seed=0)
for name, t in (("TD(lambda)", td), ("Q-learning", ql)):
    policy = "".join("LR"[t.greedy(s)] for s in range(4))
    print(f"{name:10s} greedy policy {policy}   Q(0, .) = {np.round(t.q[0], 3)}")
