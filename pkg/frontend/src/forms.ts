/**
 * Client-side form validation, mirroring the server's write checks so
 * a request that leaves the browser is one the API will accept. The
 * server remains the authority; these schemas only catch the obvious
 * mistakes before they cost a round trip.
 */

import { z } from "zod";

import type { DeviceRegistration, PolicyArgs } from "./api";

// the only threshold semantics the policy contract understands
export const THRESHOLD_TYPES = ["Minimum", "Maximum"] as const;
export const CRITICALITY_LEVELS = ["Low", "Medium", "High"] as const;

const nonEmpty = (field: string) =>
  z.string().trim().min(1, `${field} must be a non-empty string`);

// inputs arrive as strings; blank means the field was left out
const requiredNumber = (field: string) =>
  z.preprocess(
    (value) => (value === "" || value === undefined ? undefined : value),
    z.coerce.number({ error: `${field} must be a number` }),
  );

export const deviceFormSchema = z.object({
  device_id: nonEmpty("device_id"),
  ip_address: nonEmpty("ip_address"),
  model: nonEmpty("model"),
  polling_interval: requiredNumber("polling_interval").pipe(
    z
      .number()
      .int("polling_interval must be a positive integer")
      .positive("polling_interval must be a positive integer"),
  ),
  target_attributes: z
    .string()
    .transform((raw) =>
      raw
        .split(",")
        .map((part) => part.trim())
        .filter((part) => part.length > 0),
    )
    .pipe(
      z
        .array(z.string())
        .min(1, "target_attributes must name at least one attribute"),
    ),
  credentials: nonEmpty("credentials"),
});

export const policyFormSchema = z.object({
  attribute: nonEmpty("attribute"),
  threshold_type: z.enum(THRESHOLD_TYPES, {
    error: "threshold_type must be Minimum or Maximum",
  }),
  threshold_value: requiredNumber("threshold_value").pipe(
    z.number().finite("threshold_value must be finite"),
  ),
  max_violations: requiredNumber("max_violations").pipe(
    z
      .number()
      .int("max_violations must be an integer >= 0")
      .nonnegative("max_violations must be an integer >= 0"),
  ),
  criticality: z.enum(CRITICALITY_LEVELS, {
    error: "criticality must be Low, Medium or High",
  }),
});

export type DeviceFormValues = z.infer<typeof deviceFormSchema>;
export type PolicyFormValues = z.infer<typeof policyFormSchema>;

export type FormResult<T> =
  | { ok: true; value: T }
  | { ok: false; issues: string[] };

function run<S extends z.ZodType>(
  schema: S,
  raw: unknown,
): FormResult<z.output<S>> {
  const parsed = schema.safeParse(raw);
  if (parsed.success) return { ok: true, value: parsed.data };
  return {
    ok: false,
    issues: parsed.error.issues.map((issue) => {
      const path = issue.path.join(".");
      return path ? `${path}: ${issue.message}` : issue.message;
    }),
  };
}

export function parseDeviceForm(
  raw: Record<string, string>,
): FormResult<DeviceRegistration> {
  return run(deviceFormSchema, raw);
}

export function parsePolicyForm(
  raw: Record<string, string>,
): FormResult<PolicyArgs> {
  return run(policyFormSchema, raw);
}
