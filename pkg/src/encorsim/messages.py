"""
Control-plane message and trace types shared by both architectures.

A message's via_core flag is true exactly when its source or destination
is a central-core element, which is what the per-handover message
accounting compares between architectures.
"""
import enum
from collections import Counter
from dataclasses import dataclass, field


class Kind(str, enum.Enum):
    # attach
    ATTACH_REQUEST = "AttachRequest"
    AUTH_CHALLENGE = "AuthChallenge"
    AUTH_RESPONSE = "AuthResponse"
    ATTACH_ACCEPT = "AttachAccept"
    # handover (shared vocabulary)
    HO_REQUIRED = "HoRequired"
    HO_REQUEST = "HoRequest"
    HO_REQUEST_ACK = "HoRequestAck"
    HO_COMMAND = "HoCommand"
    HO_CONFIRM = "HoConfirm"
    HO_COMPLETE_NOTIFY = "HoCompleteNotify"
    UE_CONTEXT_RELEASE = "UeContextRelease"
    # LTE-only
    CREATE_INDIRECT_TUNNEL_REQ = "CreateIndirectTunnelReq"
    CREATE_INDIRECT_TUNNEL_RESP = "CreateIndirectTunnelResp"
    ENB_STATUS_TRANSFER = "eNBStatusTransfer"
    MME_STATUS_TRANSFER = "MMEStatusTransfer"
    HO_NOTIFY = "HoNotify"
    MODIFY_BEARER_REQ = "ModifyBearerReq"
    MODIFY_BEARER_RESP = "ModifyBearerResp"
    UE_CONTEXT_RELEASE_COMMAND = "UeContextReleaseCommand"
    UE_CONTEXT_RELEASE_COMPLETE = "UeContextReleaseComplete"
    # charging
    QUOTA_REQUEST = "QuotaRequest"
    QUOTA_GRANT = "QuotaGrant"


@dataclass
class ControlMessage:
    kind: Kind
    src: str
    dst: str
    via_core: bool = False
    payload: dict = field(default_factory=dict)
    time_us: int = 0


class HandoverMode(str, enum.Enum):
    CORE_ASSISTED = "CoreAssisted"
    DIRECT = "Direct"
    LTE_S1 = "LteS1"


@dataclass
class HandoverTrace:
    mode: HandoverMode
    messages: list = field(default_factory=list)
    start_us: int = 0
    end_us: int = 0
    failed: bool = False

    def append(self, msg):
        self.messages.append(msg)

    def __len__(self):
        return len(self.messages)

    def to_csv_rows(self):
        """Rows of (seq, time_us, kind, src, dst, via_core)."""
        return [
            (i, m.time_us, m.kind.value, m.src, m.dst, int(m.via_core))
            for i, m in enumerate(self.messages)
        ]

    def sequence_chart(self):
        """Plain-text message sequence chart, one arrow per line."""
        lines = [f"# {self.mode.value} handover"
                 + (" (FAILED)" if self.failed else "")]
        for i, m in enumerate(self.messages):
            core = " [core]" if m.via_core else ""
            lines.append(f"{i + 1:2d}. {m.src} -> {m.dst}: {m.kind.value}{core}")
        return "\n".join(lines)


def count_messages(trace):
    """Tally a trace: (per-kind Counter, count of core-traversing messages)."""
    kinds = Counter(m.kind for m in trace.messages)
    via_core = sum(1 for m in trace.messages if m.via_core)
    return kinds, via_core
