"""
Key Registry - long-term keys, group keys and the target keypair

The AS holds every symmetric key and the target's public key; each client
holds only its own key; the target holds K_D1, K_GD1 and its private key.
Views returned by for_server / for_client / for_target enforce that split.
"""

import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator
import structlog

from src.config import settings
from src.crypto import (
    KeySize,
    RandomSource,
    RsaKeyPair,
    RsaPublicKey,
    SymKey,
    generate_rsa_keypair,
)
from src.errors import ConfigError, UnknownClient
from src.wire import ClientList, EntityId

logger = structlog.get_logger()


class GroupConfig(BaseModel):
    """Group membership for one execution"""

    clients: List[EntityId] = Field(..., description="ClientList; the last element is the leader")
    target: EntityId = Field(..., description="Target device ID_D1")
    as_id: EntityId = Field(..., description="Authentication server")

    @field_validator("clients")
    @classmethod
    def _at_least_two(cls, value: List[int]) -> List[int]:
        if len(value) < 2:
            raise ValueError("a group needs at least two clients")
        if len(set(value)) != len(value):
            raise ValueError("client list contains duplicates")
        return value

    @model_validator(mode="after")
    def _distinct_roles(self) -> "GroupConfig":
        if self.target == self.as_id or {self.target, self.as_id} & set(self.clients):
            raise ValueError("clients, target and AS must have distinct ids")
        return self

    @classmethod
    def sequential(cls, nc: int, first_client: int = 101, target: int = 900, as_id: int = 1) -> "GroupConfig":
        """Group of nc clients with consecutive ids"""
        return cls(clients=list(range(first_client, first_client + nc)), target=target, as_id=as_id)

    @property
    def leader(self) -> int:
        return self.clients[-1]

    @property
    def nc(self) -> int:
        return len(self.clients)

    @property
    def client_list(self) -> ClientList:
        return ClientList(ids=self.clients)


class KeyRegistry(BaseModel):
    """Keys indexed by entity id, plus the static authorization table"""

    sym_keys: Dict[int, SymKey] = Field(default_factory=dict, description="K_Ci and K_Di")
    group_keys: Dict[int, SymKey] = Field(default_factory=dict, description="K_GDi")
    target_pubkeys: Dict[int, RsaPublicKey] = Field(default_factory=dict)
    target_keypairs: Dict[int, RsaKeyPair] = Field(default_factory=dict, description="Target-local")
    authorizations: Dict[int, List[List[int]]] = Field(
        default_factory=dict,
        description="Target id -> client sets allowed to access it"
    )

    @classmethod
    def provision(
        cls,
        config: GroupConfig,
        key_size: KeySize,
        rng: RandomSource,
        authorizations: Optional[Dict[int, List[List[int]]]] = None,
        keypair: Optional[RsaKeyPair] = None
    ) -> "KeyRegistry":
        """
        Create all keys for one deployment

        Args:
            config: Group membership
            key_size: RSA key-size preset
            rng: Random source (forked per purpose)
            authorizations: Authorization table; defaults to the configured
                file, or to authorizing exactly this group
            keypair: Reuse an existing target keypair

        Returns:
            Registry holding every key
        """
        sym_rng = rng.fork("registry:sym")
        sym_keys = {entity: SymKey.generate(sym_rng) for entity in [*config.clients, config.target]}
        group_keys = {config.target: SymKey.generate(sym_rng)}
        if keypair is None:
            keypair = generate_rsa_keypair(
                key_size.bits,
                rng.fork("registry:rsa"),
                insecure_test_keys=key_size.insecure
            )
        if authorizations is None:
            if settings.AUTHORIZATION_FILE:
                authorizations = cls.load_authorizations(settings.AUTHORIZATION_FILE)
            else:
                authorizations = {config.target: [list(config.clients)]}

        logger.debug("Registry provisioned", nc=config.nc, key_size=key_size.value)
        return cls(
            sym_keys=sym_keys,
            group_keys=group_keys,
            target_pubkeys={config.target: keypair.public},
            target_keypairs={config.target: keypair},
            authorizations=authorizations
        )

    @staticmethod
    def load_authorizations(path: str) -> Dict[int, List[List[int]]]:
        """
        Read `{"<target id>": [[client ids], ...]}`

        Raises:
            ConfigError: Unreadable or malformed file
        """
        try:
            raw = json.loads(Path(path).read_text())
            return {int(target): [[int(c) for c in group] for group in groups] for target, groups in raw.items()}
        except (OSError, ValueError, TypeError, AttributeError) as e:
            raise ConfigError(f"authorization table {path}: {e}") from e

    def sym_key(self, entity_id: int) -> SymKey:
        try:
            return self.sym_keys[entity_id]
        except KeyError as e:
            raise UnknownClient(f"no long-term key for {entity_id}") from e

    def group_key(self, target: int) -> SymKey:
        try:
            return self.group_keys[target]
        except KeyError as e:
            raise UnknownClient(f"no group key for {target}") from e

    def public_key(self, target: int) -> RsaPublicKey:
        try:
            return self.target_pubkeys[target]
        except KeyError as e:
            raise UnknownClient(f"no public key for {target}") from e

    def keypair(self, target: int) -> RsaKeyPair:
        try:
            return self.target_keypairs[target]
        except KeyError as e:
            raise UnknownClient(f"no keypair for {target}") from e

    def is_authorized(self, target: int, clients: Iterable[int]) -> bool:
        """True iff the client set is listed for the target"""
        wanted = frozenset(clients)
        return any(frozenset(group) == wanted for group in self.authorizations.get(target, []))

    def for_server(self) -> "KeyRegistry":
        return KeyRegistry(
            sym_keys=dict(self.sym_keys),
            group_keys=dict(self.group_keys),
            target_pubkeys=dict(self.target_pubkeys),
            authorizations=self.authorizations
        )

    def for_client(self, entity_id: int) -> "KeyRegistry":
        return KeyRegistry(
            sym_keys={entity_id: self.sym_key(entity_id)},
            target_pubkeys=dict(self.target_pubkeys)
        )

    def for_target(self, target: int) -> "KeyRegistry":
        return KeyRegistry(
            sym_keys={target: self.sym_key(target)},
            group_keys={target: self.group_key(target)},
            target_pubkeys={target: self.public_key(target)},
            target_keypairs={target: self.keypair(target)}
        )

    def granted(self, entity_ids: Iterable[int]) -> "KeyRegistry":
        """Subset of long-term keys handed to the adversary by a script"""
        return KeyRegistry(
            sym_keys={i: self.sym_keys[i] for i in entity_ids if i in self.sym_keys},
            target_pubkeys=dict(self.target_pubkeys)
        )
