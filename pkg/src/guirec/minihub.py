"""The bundled "mini-hub" application model and scripted walks.

An eight-page code-hosting site: a gated login screen, a dashboard with
navigation, a repository page, an issue list, a gated new-issue form,
plus profile / search / settings pages.  Every page also carries inert
filler elements (links, rows, menus) so the action inventory is large —
522 distinct actions in total — while only a handful of actions actually
move between pages.  Two gates guard the interesting flows:

  * sign-in fires only after the user and password fields were filled,
    in that order;
  * submitting a new issue requires title then body.

``generate_scripts`` produces seeded user-like walks over the model: log
in first, then wander — favouring a few habitual elements per page, which
gives the recorded corpus the heavy-headed action frequency profile real
clickstreams show.
"""

from __future__ import annotations

import numpy as np

from .catalog import ActionSignature
from .gui_sim import GateRule, GuiModel
from .rng import generator

LOGIN, DASHBOARD, REPO, ISSUES, ISSUE_NEW, PROFILE, SEARCH, SETTINGS = (
    "/login", "/dashboard", "/repo", "/repo/issues", "/repo/issues/new",
    "/profile", "/search", "/settings")

USER_FIELD = "/html/body/div[1]/form/input[1]"
PASS_FIELD = "/html/body/div[1]/form/input[2]"
SIGNIN_BUTTON = "/html/body/div[1]/form/button[1]"
TITLE_FIELD = "/html/body/main/form/input[1]"
BODY_FIELD = "/html/body/main/form/textarea[1]"
SUBMIT_BUTTON = "/html/body/main/form/button[1]"
CANCEL_BUTTON = "/html/body/main/form/a[1]"
SEARCH_BOX = "/html/body/header/input[1]"

# (page, flow elements, filler count); fillers are inert click targets and
# every page also gets a reload (navigate) pseudo-element.  Totals 522.
_PAGE_PLAN = (
    (LOGIN, ((USER_FIELD, "type_text"), (PASS_FIELD, "type_text"),
             (SIGNIN_BUTTON, "click")), 16),
    (DASHBOARD, (("/html/body/nav/a[1]", "click"),      # -> repo
                 ("/html/body/nav/a[2]", "click"),      # -> profile
                 ("/html/body/nav/a[3]", "click"),      # -> search
                 ("/html/body/nav/a[4]", "click")), 75),  # -> settings
    (REPO, (("/html/body/main/nav/a[1]", "click"),      # -> issues
            ("/html/body/nav/a[5]", "click")), 87),     # -> dashboard
    (ISSUES, (("/html/body/main/a[1]", "click"),        # -> new issue
              ("/html/body/main/nav/a[2]", "click")), 77),  # -> repo
    (ISSUE_NEW, ((TITLE_FIELD, "type_text"), (BODY_FIELD, "type_text"),
                 (SUBMIT_BUTTON, "click"), (CANCEL_BUTTON, "click")), 25),
    (PROFILE, (("/html/body/nav/a[6]", "click"),), 68),   # -> dashboard
    (SEARCH, ((SEARCH_BOX, "type_text"),
              ("/html/body/main/div[1]/a[1]", "click"),   # -> repo
              ("/html/body/nav/a[7]", "click")), 68),     # -> dashboard
    (SETTINGS, (("/html/body/nav/a[8]", "click"),), 78),  # -> dashboard
)

_TRANSITIONS = {
    (LOGIN, SIGNIN_BUTTON, "click"): DASHBOARD,
    (DASHBOARD, "/html/body/nav/a[1]", "click"): REPO,
    (DASHBOARD, "/html/body/nav/a[2]", "click"): PROFILE,
    (DASHBOARD, "/html/body/nav/a[3]", "click"): SEARCH,
    (DASHBOARD, "/html/body/nav/a[4]", "click"): SETTINGS,
    (REPO, "/html/body/main/nav/a[1]", "click"): ISSUES,
    (REPO, "/html/body/nav/a[5]", "click"): DASHBOARD,
    (ISSUES, "/html/body/main/a[1]", "click"): ISSUE_NEW,
    (ISSUES, "/html/body/main/nav/a[2]", "click"): REPO,
    (ISSUE_NEW, SUBMIT_BUTTON, "click"): ISSUES,
    (ISSUE_NEW, CANCEL_BUTTON, "click"): ISSUES,
    (PROFILE, "/html/body/nav/a[6]", "click"): DASHBOARD,
    (SEARCH, "/html/body/main/div[1]/a[1]", "click"): REPO,
    (SEARCH, "/html/body/nav/a[7]", "click"): DASHBOARD,
    (SETTINGS, "/html/body/nav/a[8]", "click"): DASHBOARD,
}


def _filler(k: int) -> tuple[str, str]:
    return (f"/html/body/main/div[2]/div[{k + 1}]/a", "click")


def build_minihub() -> GuiModel:
    """Construct the mini-hub model (8 states, 522 actions, 2 gates)."""
    states = tuple(page for page, _, _ in _PAGE_PLAN)
    elements: dict[str, tuple[tuple[str, str], ...]] = {}
    for page, flow, filler_count in _PAGE_PLAN:
        rows = list(flow)
        rows.append((page, "navigate"))  # page reload, keyed by the page itself
        rows.extend(_filler(k) for k in range(filler_count))
        elements[page] = tuple(rows)
    gates = (
        GateRule(state=LOGIN, element_locator=SIGNIN_BUTTON, action_type="click",
                 required_prefix=(ActionSignature(LOGIN, USER_FIELD, "type_text"),
                                  ActionSignature(LOGIN, PASS_FIELD, "type_text"))),
        GateRule(state=ISSUE_NEW, element_locator=SUBMIT_BUTTON, action_type="click",
                 required_prefix=(ActionSignature(ISSUE_NEW, TITLE_FIELD, "type_text"),
                                  ActionSignature(ISSUE_NEW, BODY_FIELD, "type_text"))),
    )
    return GuiModel(states=states, elements=elements, transitions=dict(_TRANSITIONS),
                    gates=gates, initial_state=LOGIN)


LOGIN_WALK = (ActionSignature(LOGIN, USER_FIELD, "type_text"),
              ActionSignature(LOGIN, PASS_FIELD, "type_text"),
              ActionSignature(LOGIN, SIGNIN_BUTTON, "click"))

ISSUE_WALK = (ActionSignature(ISSUE_NEW, TITLE_FIELD, "type_text"),
              ActionSignature(ISSUE_NEW, BODY_FIELD, "type_text"),
              ActionSignature(ISSUE_NEW, SUBMIT_BUTTON, "click"))

# Per-page probabilities of the next move kind while wandering.
_P_TRANSITION = 0.38
_P_HABIT = 0.50
_P_ANY_FILLER = 0.09
_P_RELOAD = 0.03
_HABIT_WEIGHTS = np.array([0.35, 0.25, 0.18, 0.12, 0.10])


def generate_scripts(model: GuiModel, n_scripts: int = 50, seed: int = 1,
                     mean_length: float = 12.0) -> list[list[ActionSignature]]:
    """Seeded user-like walks, each starting with the login procedure.

    Wandering prefers a small habitual subset of each page's fillers, so a
    few action IDs dominate the corpus.  Entering the new-issue page
    always plays the title/body/submit sequence (truncated if the session
    ends first).
    """
    rng = generator(seed)
    transitions_by_state: dict[str, list[ActionSignature]] = {}
    for (state, locator, action_type), _target in sorted(model.transitions.items()):
        transitions_by_state.setdefault(state, []).append(
            ActionSignature(state, locator, action_type))
    fillers_by_state = {
        state: [ActionSignature(state, loc, at) for loc, at in model.elements[state]
                if (state, loc, at) not in model.transitions and at != "navigate"
                and (state, loc, at) not in {(g.state, g.element_locator, g.action_type)
                                             for g in model.gates}]
        for state in model.states
    }
    # Field fills are self-loops but belong to gate prefixes; exclude them
    # from casual wandering so forms only get touched deliberately.
    prefix_sigs = {sig for g in model.gates for sig in g.required_prefix}
    for state in fillers_by_state:
        fillers_by_state[state] = [s for s in fillers_by_state[state] if s not in prefix_sigs]

    scripts = []
    for _ in range(n_scripts):
        length = int(np.clip(np.round(rng.normal(mean_length, 3.5)), 6, 28))
        walk: list[ActionSignature] = list(LOGIN_WALK)
        state = DASHBOARD
        pending: list[ActionSignature] = []
        while len(walk) < length:
            if pending:
                sig = pending.pop(0)
            else:
                move = rng.random()
                fillers = fillers_by_state[state]
                habit_pool = fillers[:len(_HABIT_WEIGHTS)]
                if move < _P_TRANSITION and transitions_by_state.get(state):
                    options = transitions_by_state[state]
                    sig = options[int(rng.integers(len(options)))]
                elif move < _P_TRANSITION + _P_HABIT and habit_pool:
                    w = _HABIT_WEIGHTS[:len(habit_pool)]
                    sig = habit_pool[int(rng.choice(len(habit_pool), p=w / w.sum()))]
                elif move < _P_TRANSITION + _P_HABIT + _P_ANY_FILLER and fillers:
                    sig = fillers[int(rng.integers(len(fillers)))]
                else:
                    sig = ActionSignature(state, state, "navigate")
            walk.append(sig)
            target = model.transitions.get((sig.page, sig.element_locator, sig.action_type))
            if target is not None:
                state = target
                if state == ISSUE_NEW:
                    pending = list(ISSUE_WALK)
        scripts.append(walk)
    return scripts
