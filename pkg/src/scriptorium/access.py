"""Roles, organisation scoping, per-entity edit grants and token sessions.

The decision function is pure: the same (user, action, resource, grants,
flags) always yields the same decision, and cross-organisation access is
never granted to anyone but the system administrator.
"""
from __future__ import annotations

import hashlib
import secrets
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

ROLES = ("system-admin", "org-admin", "editor", "guest")
ACTIONS = ("view", "create", "edit", "delete", "request-publish",
           "approve-publish", "manage-vocab", "manage-users", "manage-orgs",
           "grant-edit")

# actions resolved against an entity resource; the rest are org/system scoped
ENTITY_ACTIONS = ("view", "edit", "delete", "request-publish",
                  "approve-publish", "grant-edit")

DEFAULT_SESSION_IDLE_SECONDS = 12 * 3600


class AccessError(ValueError):
    pass


class PermissionDeniedError(PermissionError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass
class User:
    user_id: str
    display_name: str
    role: str
    org_id: str | None = None       # absent only for system-admin
    credential_hash: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise AccessError(f"unknown role {self.role!r}")
        if self.role == "system-admin":
            self.org_id = None
        elif not self.org_id:
            raise AccessError(f"role {self.role!r} requires an organisation")


@dataclass
class Organisation:
    org_id: str
    name: str
    editors_edit_all: bool = False


@dataclass
class EditGrant:
    entity_id: str
    grantee_user_id: str
    granted_by: str
    granted_at: str


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = Decision(True)


def _deny(reason: str) -> Decision:
    return Decision(False, reason)


def _hash_password(password: str, salt: str) -> str:
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"),
                                 bytes.fromhex(salt), 20000)
    return digest.hex()


def make_credential(password: str) -> str:
    salt = secrets.token_hex(8)
    return f"{salt}${_hash_password(password, salt)}"


def check_credential(credential: str, password: str) -> bool:
    salt, _, expected = credential.partition("$")
    return secrets.compare_digest(_hash_password(password, salt), expected)


@dataclass
class _Session:
    user_id: str
    last_used: float


class AccessControl:
    def __init__(self, org_admin_edits_all: bool = True,
                 session_idle_seconds: int = DEFAULT_SESSION_IDLE_SECONDS,
                 clock=time.time):
        self.users: dict[str, User] = {}
        self.orgs: dict[str, Organisation] = {}
        self.grants: dict[str, dict[str, EditGrant]] = {}  # entity -> grantee -> grant
        self.org_admin_edits_all = org_admin_edits_all
        self.session_idle_seconds = session_idle_seconds
        self._clock = clock
        self._sessions: dict[str, _Session] = {}

    # -- decision function ---------------------------------------------

    def has_grant(self, entity_id: str, user_id: str) -> bool:
        return user_id in self.grants.get(entity_id, {})

    def authorize(self, user: User, action: str, resource=None) -> Decision:
        """Decide an action. `resource` is an entity document for entity
        actions, an organisation id for org-scoped actions, None for
        system-scoped ones."""
        if action not in ACTIONS:
            return _deny(f"unknown action {action!r}")
        if user.role == "system-admin":
            return ALLOW
        if action == "manage-orgs":
            return _deny("only the system administrator manages organisations")

        if action in ENTITY_ACTIONS:
            if resource is None:
                return _deny(f"{action} needs an entity resource")
            org_id = resource.org_id
            creator = resource.creator_user_id
            entity_id = resource.id
        else:  # create, manage-vocab, manage-users target an organisation
            org_id = resource if isinstance(resource, str) else getattr(resource, "org_id", None)
            creator = None
            entity_id = None
        if org_id is not None and org_id != user.org_id:
            return _deny("cross-org access is not allowed")

        if user.role == "guest":
            if action == "view":
                return ALLOW
            return _deny("guests may only view")

        if user.role == "org-admin":
            if action in ("edit", "delete") and not self.org_admin_edits_all:
                if creator == user.user_id or self.has_grant(entity_id, user.user_id):
                    return ALLOW
                return _deny("organisation administrators are configured without blanket edit access")
            if action in ("view", "create", "edit", "delete", "request-publish",
                          "approve-publish", "manage-vocab", "manage-users", "grant-edit"):
                return ALLOW
            return _deny(f"org-admin may not {action}")

        # editor
        org = self.orgs.get(user.org_id or "")
        editors_edit_all = bool(org and org.editors_edit_all)
        if action == "view" or action == "create":
            return ALLOW
        if action == "edit":
            if creator == user.user_id or self.has_grant(entity_id, user.user_id) \
                    or editors_edit_all:
                return ALLOW
            return _deny("not-creator: editors edit only their own or granted entities")
        if action == "delete":
            if creator == user.user_id:
                return ALLOW
            return _deny("editors delete only entities they created")
        if action == "request-publish":
            if creator == user.user_id or self.has_grant(entity_id, user.user_id):
                return ALLOW
            return _deny("publishing can be requested only for own or granted entities")
        if action == "grant-edit":
            if creator == user.user_id:
                return ALLOW
            return _deny("only the creator (or an administrator) grants edit rights")
        return _deny(f"editors may not {action}")

    def require(self, user: User, action: str, resource=None) -> None:
        decision = self.authorize(user, action, resource)
        if not decision:
            raise PermissionDeniedError(decision.reason or "denied")

    # -- grants ---------------------------------------------------------

    def grant_edit(self, granter: User, entity, grantee_user_id: str,
                   now: str = "") -> EditGrant:
        grantee = self.users.get(grantee_user_id)
        if grantee is None:
            raise AccessError(f"unknown user {grantee_user_id!r}")
        if grantee.org_id != entity.org_id:
            raise AccessError("cross-org grant: grantee must belong to the entity's organisation")
        self.require(granter, "grant-edit", entity)
        grant = EditGrant(entity.id, grantee_user_id, granter.user_id, now)
        self.grants.setdefault(entity.id, {})[grantee_user_id] = grant
        return grant

    def revoke_edit(self, granter: User, entity, grantee_user_id: str) -> None:
        self.require(granter, "grant-edit", entity)
        self.grants.get(entity.id, {}).pop(grantee_user_id, None)

    def drop_entity_grants(self, entity_id: str) -> None:
        self.grants.pop(entity_id, None)

    # -- provisioning ----------------------------------------------------

    def create_org(self, actor: User, org_id: str, name: str,
                   editors_edit_all: bool = False) -> Organisation:
        self.require(actor, "manage-orgs")
        if org_id in self.orgs:
            raise AccessError(f"organisation {org_id!r} already exists")
        org = Organisation(org_id, name, editors_edit_all)
        self.orgs[org_id] = org
        return org

    def create_user(self, actor: User, user_id: str, display_name: str,
                    role: str, org_id: str | None, password: str) -> User:
        if role == "system-admin" or role == "org-admin":
            self.require(actor, "manage-orgs")
        else:
            self.require(actor, "manage-users", org_id)
        if user_id in self.users:
            raise AccessError(f"user {user_id!r} already exists")
        if role != "system-admin":
            if org_id not in self.orgs:
                raise AccessError(f"unknown organisation {org_id!r}")
            for other in self.users.values():
                if other.org_id == org_id and other.display_name == display_name:
                    raise AccessError(
                        f"user named {display_name!r} already exists in {org_id!r}")
        user = User(user_id, display_name, role, org_id,
                    credential_hash=make_credential(password))
        self.users[user_id] = user
        return user

    def bootstrap_system_admin(self, user_id: str, display_name: str,
                               password: str) -> User:
        """First principal of a fresh installation; no actor needed yet."""
        if self.users:
            raise AccessError("installation already has principals")
        user = User(user_id, display_name, "system-admin",
                    credential_hash=make_credential(password))
        self.users[user_id] = user
        return user

    # -- authentication ---------------------------------------------------

    def authenticate(self, user_id: str, password: str) -> str:
        user = self.users.get(user_id)
        if user is None or not user.credential_hash \
                or not check_credential(user.credential_hash, password):
            raise PermissionDeniedError("bad credentials")
        token = secrets.token_hex(16)
        self._sessions[token] = _Session(user_id, self._clock())
        return token

    def resolve_token(self, token: str) -> User:
        session = self._sessions.get(token)
        if session is None:
            raise PermissionDeniedError("unknown or expired token")
        now = self._clock()
        if now - session.last_used > self.session_idle_seconds:
            del self._sessions[token]
            raise PermissionDeniedError("session expired")
        session.last_used = now
        return self.users[session.user_id]

    def logout(self, token: str) -> None:
        self._sessions.pop(token, None)

    # -- persistence -------------------------------------------------------

    def save(self, path: Path) -> None:
        root = ET.Element("principals")
        for org in sorted(self.orgs.values(), key=lambda o: o.org_id):
            ET.SubElement(root, "org", id=org.org_id, name=org.name,
                          editorsEditAll=str(org.editors_edit_all).lower())
        for user in sorted(self.users.values(), key=lambda u: u.user_id):
            attrs = {"id": user.user_id, "name": user.display_name,
                     "role": user.role, "credential": user.credential_hash}
            if user.org_id:
                attrs["org"] = user.org_id
            ET.SubElement(root, "user", attrs)
        for entity_id in sorted(self.grants):
            for grant in sorted(self.grants[entity_id].values(),
                                key=lambda g: g.grantee_user_id):
                ET.SubElement(root, "grant", entity=grant.entity_id,
                              grantee=grant.grantee_user_id,
                              grantedBy=grant.granted_by, grantedAt=grant.granted_at)
        tree = ET.ElementTree(root)
        ET.indent(tree)
        path.parent.mkdir(parents=True, exist_ok=True)
        tree.write(path, encoding="unicode", xml_declaration=True)

    def load(self, path: Path) -> None:
        root = ET.parse(path).getroot()
        self.orgs.clear()
        self.users.clear()
        self.grants.clear()
        for el in root.findall("org"):
            org = Organisation(el.get("id") or "", el.get("name") or "",
                               (el.get("editorsEditAll") or "false") == "true")
            self.orgs[org.org_id] = org
        for el in root.findall("user"):
            user = User(el.get("id") or "", el.get("name") or "",
                        el.get("role") or "", el.get("org"),
                        el.get("credential") or "")
            self.users[user.user_id] = user
        for el in root.findall("grant"):
            grant = EditGrant(el.get("entity") or "", el.get("grantee") or "",
                              el.get("grantedBy") or "", el.get("grantedAt") or "")
            self.grants.setdefault(grant.entity_id, {})[grant.grantee_user_id] = grant
