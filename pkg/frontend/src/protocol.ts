/**
 * Wire protocol schemas for the matcher service.
 *
 * Every message that crosses the socket (or the HTTP fallback) is
 * validated against these schemas on the way in and out, mirroring the
 * service's own validation.
 */

import { z } from "zod";

export const PatchSchema = z.object({
  hue: z.number(),
  sat: z.number().min(0).max(1),
  light: z.number().min(0).max(1),
});
export type Patch = z.infer<typeof PatchSchema>;

export const SessionCreatedSchema = z.object({
  session: z.string().min(1),
  patches: z.array(PatchSchema).length(3),
});
export type SessionCreated = z.infer<typeof SessionCreatedSchema>;

export const ReplyKindSchema = z.enum(["clarify", "select", "none", "timeout"]);
export type ReplyKind = z.infer<typeof ReplyKindSchema>;

export const ReplySchema = z.object({
  kind: ReplyKindSchema,
  text: z.string().nullish(),
  index: z.number().int().min(0).max(2).nullish(),
  correct: z.boolean().nullish(),
});
export type Reply = z.infer<typeof ReplySchema>;

export const MAX_UTTERANCE_CHARS = 500;

export const UtterancePayloadSchema = z.object({
  text: z.string().min(1).max(MAX_UTTERANCE_CHARS),
});
export type UtterancePayload = z.infer<typeof UtterancePayloadSchema>;

export const RatePayloadSchema = z.object({
  rating: z.number().int().min(0).max(5),
  feedback: z.string().default(""),
});
export type RatePayload = z.infer<typeof RatePayloadSchema>;

/** Envelope wrapping every WebSocket message in both directions. */
export const EnvelopeSchema = z.object({
  type: z.enum(["create", "utterance", "rate", "reply", "select", "error"]),
  session: z.string().nullish(),
  payload: z.record(z.unknown()).default({}),
});
export type Envelope = z.infer<typeof EnvelopeSchema>;

export function parseReply(payload: unknown): Reply {
  return ReplySchema.parse(payload);
}

export function parseSessionCreated(payload: unknown): SessionCreated {
  return SessionCreatedSchema.parse(payload);
}
