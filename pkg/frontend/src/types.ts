/** Wire types for the annotation service, validated with zod on receipt. */

import { z } from "zod";

export const BoxBevSchema = z.object({
  x: z.number(),
  y: z.number(),
  l: z.number(),
  w: z.number(),
  theta: z.number(),
});
export type BoxBev = z.infer<typeof BoxBevSchema>;

export const Box3dSchema = BoxBevSchema.extend({
  z: z.number(),
  h: z.number(),
});
export type Box3d = z.infer<typeof Box3dSchema>;

export const CornerSchema = z.object({
  n: z.number().int().min(0).max(3),
  x: z.number(),
  y: z.number(),
  zg: z.number(),
});
export type CornerOut = z.infer<typeof CornerSchema>;

export const ImageBoxSchema = z.tuple([
  z.number(), z.number(), z.number(), z.number(),
]);
export type ImageBox = z.infer<typeof ImageBoxSchema>;

export const AnnotationRecordSchema = z.object({
  frame: z.string(),
  object: z.string(),
  corners: z.array(CornerSchema).max(4),
  image_box: ImageBoxSchema.nullable(),
});
export type AnnotationRecord = z.infer<typeof AnnotationRecordSchema>;

export const FramesResponseSchema = z.object({
  frames: z.array(z.string()),
});

export const BevResponseSchema = z.object({
  frame: z.string(),
  total: z.number().int(),
  count: z.number().int(),
  x: z.array(z.number()),
  y: z.array(z.number()),
});
export type BevPoints = z.infer<typeof BevResponseSchema>;

export const AnnotationsResponseSchema = z.object({
  frame: z.string(),
  records: z.array(AnnotationRecordSchema),
});

export const RecoverResponseSchema = z.object({
  frame: z.string(),
  object: z.string(),
  status: z.enum(["ok", "partial", "failed"]),
  reason: z.string().nullable(),
  detail: z.string().nullable(),
  case: z.string().nullable(),
  n_corners: z.number().int(),
  weight: z.number(),
  bev: BoxBevSchema.nullable(),
  box3d: Box3dSchema.nullable(),
  corners: z.array(CornerSchema),
});
export type RecoverResponse = z.infer<typeof RecoverResponseSchema>;

/** A corner as clicked locally; zg is filled in by the service's ground fit. */
export interface ClickedCorner {
  n: number;
  x: number;
  y: number;
  zg?: number;
}

export interface RecoverRequest {
  object: string;
  corners: ClickedCorner[];
  image_box: ImageBox | null;
}
