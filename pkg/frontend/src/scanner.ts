/**
 * In-browser code scanner: grabs frames from the camera and runs them
 * through the jsQR decoder until one yields text. Pixel work stays in this
 * module; everything downstream deals in decoded text only. When the
 * camera is unavailable the UI falls back to manual text entry.
 */

import jsQR from "jsqr";

export interface Frame {
  data: Uint8ClampedArray;
  width: number;
  height: number;
}

/** Anything that can produce RGBA frames: a video element wrapper, a test image. */
export type FrameSource = () => Promise<Frame | null>;

/** Decode one RGBA frame; null when no QR code is found in it. */
export function decodeQrFrame(frame: Frame): string | null {
  const result = jsQR(frame.data, frame.width, frame.height);
  return result === null ? null : result.data;
}

export interface ScanAttemptOptions {
  maxFrames?: number;
}

/**
 * Poll the source until a frame decodes or the frame budget runs out.
 * Returns the decoded text, or null so the caller can offer manual entry.
 */
export async function scanUntilDecoded(
  source: FrameSource,
  options: ScanAttemptOptions = {},
): Promise<string | null> {
  const maxFrames = options.maxFrames ?? 120;
  for (let i = 0; i < maxFrames; i++) {
    const frame = await source();
    if (frame === null) return null;
    const text = decodeQrFrame(frame);
    if (text !== null) return text;
  }
  return null;
}

/**
 * Camera-backed frame source. Browser-only; returns null when permission
 * is denied or no camera exists, which the UI treats as "type it in".
 */
export async function cameraFrameSource(video: HTMLVideoElement): Promise<FrameSource | null> {
  if (typeof navigator === "undefined" || navigator.mediaDevices === undefined) {
    return null;
  }
  let stream: MediaStream;
  try {
    stream = await navigator.mediaDevices.getUserMedia({
      video: { facingMode: "environment" },
    });
  } catch {
    return null;
  }
  video.srcObject = stream;
  await video.play();
  const canvas = document.createElement("canvas");
  const context = canvas.getContext("2d", { willReadFrequently: true });
  if (context === null) return null;
  return async () => {
    if (video.videoWidth === 0) return { data: new Uint8ClampedArray(4), width: 1, height: 1 };
    canvas.width = video.videoWidth;
    canvas.height = video.videoHeight;
    context.drawImage(video, 0, 0);
    const image = context.getImageData(0, 0, canvas.width, canvas.height);
    return { data: image.data, width: image.width, height: image.height };
  };
}
