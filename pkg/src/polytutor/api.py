"""HTTP/JSON surface of the tutoring service.

Thin transport over TutorService: every route authenticates (except
register and login), delegates, and maps domain errors onto HTTP statuses
by their stable error code.  Error bodies always look like
``{"error": {"code", "message", "details"}}``.
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import TutorError
from .session import InvalidToken, TutorService

_STATUS_BY_CODE = {
    "invalid_token": 401,
    "invalid_credentials": 401,
    "name_taken": 409,
    "wrong_phase": 409,
    "sequence_gap": 409,
    "unknown_test": 404,
    "unknown_concept": 404,
    "unsupported_language": 400,
    "missing_response": 400,
    "invalid_likert": 400,
    "missing_answer": 400,
    "unknown_question": 400,
    "out_of_range": 400,
    "invalid_language": 400,
    "unsupported_pair": 400,
    "text_too_long": 400,
    "auth_failure": 502,
    "backend_unavailable": 503,
    "content_unavailable": 503,
}

# Errors a client may sensibly retry without changing the request.
_RETRYABLE_CODES = {"backend_unavailable"}


class RegisterBody(BaseModel):
    name: str
    password: str
    language: str


class LoginBody(BaseModel):
    name: str
    password: str


class QuestionnaireBody(BaseModel):
    responses: dict[str, int]


class AnswersBody(BaseModel):
    answers: dict[str, int]


class ChatBody(BaseModel):
    target_language: str
    text: str


def _bearer_token(request: Request) -> str:
    header = request.headers.get("authorization", "")
    scheme, _, token = header.partition(" ")
    if scheme.lower() != "bearer" or not token:
        raise InvalidToken("missing bearer token")
    return token.strip()


def create_app(service: TutorService) -> FastAPI:
    app = FastAPI(title="polytutor", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    @app.exception_handler(TutorError)
    async def tutor_error_handler(_request: Request, exc: TutorError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        body = {
            "error": {
                "code": exc.code,
                "message": str(exc),
                "details": dict(exc.details),
            }
        }
        if exc.code in _RETRYABLE_CODES:
            body["error"]["retryable"] = True
        return JSONResponse(status_code=status, content=body)

    @app.post("/v1/register")
    def register(body: RegisterBody):
        learner_id = service.register(body.name, body.password, body.language)
        return {"learner_id": learner_id}

    @app.post("/v1/login")
    def login(body: LoginBody):
        return {"token": service.login(body.name, body.password)}

    @app.get("/v1/questionnaire")
    def get_questionnaire(token: str = Depends(_bearer_token)):
        return service.questionnaire(token)

    @app.post("/v1/questionnaire")
    def post_questionnaire(body: QuestionnaireBody, token: str = Depends(_bearer_token)):
        return service.submit_questionnaire(token, body.responses)

    @app.get("/v1/next")
    def next_step(token: str = Depends(_bearer_token)):
        return service.next_step(token)

    @app.post("/v1/tests/{test_id}")
    def submit_test(test_id: str, body: AnswersBody, token: str = Depends(_bearer_token)):
        return service.submit_test(token, test_id, body.answers)

    @app.get("/v1/progress")
    def progress(token: str = Depends(_bearer_token)):
        return service.progress(token)

    @app.post("/v1/chat/translate")
    def chat_translate(body: ChatBody, token: str = Depends(_bearer_token)):
        return service.chat_translate(token, body.target_language, body.text)

    return app
