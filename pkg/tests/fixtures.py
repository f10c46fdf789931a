"""Shared fixture data: the trap-structure questionnaire and known encodings.

The questionnaire vocabulary follows the published petroleum-exploration
example this project's test data is drawn from; the expected bit rows are
the published encodings for prospects A through E.
"""

from riskkit import Characterization, Expert, Question, Questionnaire, RiskFactor
from riskkit.reference import OneHotVector, TrainingExample, encode_one_hot, questionnaire_layout_id
from riskkit.store import AddCharacterization, AddExpert, AddRiskFactor, SetQuestionnaire

TRAP_QUESTIONNAIRE = Questionnaire(
    id="q-trap-structure",
    risk_factor_id="rf-trap-structure",
    questions=(
        Question(
            id="calibration",
            text="Seismic calibration available?",
            options=(("yes", "Yes"), ("no", "No")),
        ),
        Question(
            id="data_type",
            text="Seismic data type",
            options=(("3d", "3D"), ("2d", "2D")),
        ),
        Question(
            id="density",
            text="Seismic density",
            options=(("dense", "Dense"), ("sparse", "Sparse"), ("very_sparse", "Very Sparse")),
        ),
        Question(
            id="quality",
            text="Seismic data visual quality",
            options=(("good", "Good"), ("medium", "Medium"), ("bad", "Bad")),
        ),
        Question(
            id="interpretation",
            text="Structure interpretation",
            options=(("easy", "Easy/reliable"), ("uncertain", "Uncertain"), ("unreliable", "Unreliable")),
        ),
        Question(
            id="complexity",
            text="Structure complexity",
            options=(
                ("four_way", "4-way"),
                ("three_way", "3-way"),
                ("two_way", "2-way"),
                ("stratigraphic", "Stratigraphic"),
            ),
        ),
        Question(
            id="relief",
            text="Structural relief",
            options=(("low", "Low-relief"), ("medium", "Medium-relief"), ("high", "High-relief")),
        ),
    ),
)

TRAP_LAYOUT_ID = questionnaire_layout_id(TRAP_QUESTIONNAIRE)

PROSPECT_ANSWERS = {
    "A": {
        "calibration": "yes",
        "data_type": "2d",
        "density": "very_sparse",
        "quality": "bad",
        "interpretation": "easy",
        "complexity": "four_way",
        "relief": "low",
    },
    "B": {
        "calibration": "no",
        "data_type": "3d",
        "quality": "good",
        "complexity": "four_way",
        "relief": "high",
    },
    "C": {
        "calibration": "no",
        "data_type": "3d",
        "quality": "good",
        "complexity": "three_way",
        "relief": "low",
    },
    "D": {
        "calibration": "no",
        "data_type": "3d",
        "quality": "good",
        "complexity": "stratigraphic",
        "relief": "low",
    },
    "E": {
        "calibration": "no",
        "data_type": "2d",
        "density": "very_sparse",
        "quality": "bad",
        "complexity": "stratigraphic",
        "relief": "low",
    },
}

# the published 20-bit encodings for the five prospects
EXPECTED_BITS = {
    "A": (1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0),
    "B": (0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1),
    "C": (0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0),
    "D": (0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0),
    "E": (0, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0),
}


def prospect_characterization(label, status="peer_reviewed"):
    return Characterization(
        id="char-%s" % label.lower(),
        prospect_id="prospect-%s" % label.lower(),
        risk_factor_id="rf-trap-structure",
        answers=dict(PROSPECT_ANSWERS[label]),
        status=status,
    )


def prospect_vector(label) -> OneHotVector:
    return encode_one_hot(prospect_characterization(label), TRAP_QUESTIONNAIRE)


def synthetic_training_set(rng, count=50):
    """Examples whose lok is the fraction of set bits in the first block.

    Answer patterns are random; the target depends only on whether the
    calibration question was answered, which a linear model fits exactly
    while nearest-neighbour averaging cannot.
    """
    q = TRAP_QUESTIONNAIRE
    first_width = len(q.questions[0].options)
    out = []
    for n in range(count):
        answers = {}
        for question in q.questions:
            if rng.random() < 0.75:
                answers[question.id] = rng.choice(question.option_ids())
        c = Characterization(
            id="syn-%03d" % n,
            prospect_id="syn-prospect-%03d" % n,
            risk_factor_id=q.risk_factor_id,
            answers=answers,
            status="peer_reviewed",
        )
        v = encode_one_hot(c, q)
        lok = sum(v.bits[:first_width]) / first_width
        out.append(TrainingExample(characterization_id=c.id, vector=v, lok=lok))
    return out


TRAP_RISK_FACTOR = RiskFactor(
    id="rf-trap-structure", name="Trap structure", questionnaire_id="q-trap-structure"
)


def seed_trap_workspace(store, workspace_id="ws-1", experts=("alice", "bob")):
    """Create a workspace with the trap questionnaire, experts and chars A-E.

    Returns a commit helper bound to the workspace's current version.
    """
    store.create(workspace_id)

    def commit(mutation):
        current = store.get(workspace_id)
        return store.commit(workspace_id, current.version, mutation)

    commit(AddRiskFactor(TRAP_RISK_FACTOR))
    commit(SetQuestionnaire(TRAP_QUESTIONNAIRE))
    for expert_id in experts:
        commit(AddExpert(Expert(id=expert_id, display_name=expert_id.title())))
    for label in "ABCDE":
        commit(AddCharacterization(prospect_characterization(label, status="draft")))
    return commit


def questionnaire_json(q=None):
    """Wire shape used by the API questionnaire endpoint and CLI import."""
    q = q or TRAP_QUESTIONNAIRE
    return {
        "id": q.id,
        "risk_factor_id": q.risk_factor_id,
        "questions": [
            {
                "id": question.id,
                "text": question.text,
                "options": [
                    {"id": oid, "label": label} for oid, label in question.options
                ],
            }
            for question in q.questions
        ],
    }


def characterization_json(label, status="draft"):
    c = prospect_characterization(label, status=status)
    return {
        "id": c.id,
        "prospect_id": c.prospect_id,
        "risk_factor_id": c.risk_factor_id,
        "answers": dict(c.answers),
        "status": c.status,
    }


def import_document(experts=("alice", "bob"), labels="ABCDE"):
    """Complete CLI import file: catalog, experts and draft characterizations."""
    return {
        "risk_factors": [
            {
                "id": TRAP_RISK_FACTOR.id,
                "name": TRAP_RISK_FACTOR.name,
                "questionnaire_id": TRAP_RISK_FACTOR.questionnaire_id,
            }
        ],
        "questionnaires": [questionnaire_json()],
        "experts": [{"id": e, "display_name": e.title()} for e in experts],
        "characterizations": [characterization_json(label) for label in labels],
    }
