/**
 * Service worker: precaches the app shell on install and serves it
 * cache-first afterwards, so the app opens with no network at all.
 * API reads go network-first with a cache fallback; mutations are never
 * cached (the offline queue owns those).
 *
 * The decision logic is exported as plain functions over a narrow cache
 * interface so it can be exercised outside a browser.
 */

export const CACHE_NAME = "ims-shell-v1";

export const APP_SHELL = [
  "/",
  "/index.html",
  "/app.css",
  "/main.js",
  "/manifest.webmanifest",
  "/icons/icon-192.png",
  "/icons/icon-512.png",
];

export interface CacheLike {
  match(url: string): Promise<Response | undefined>;
  put(url: string, response: Response): Promise<void>;
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export function isApiRequest(url: string): boolean {
  return new URL(url, "http://sw.invalid").pathname.startsWith("/api/");
}

export function isShellRequest(url: string): boolean {
  const pathname = new URL(url, "http://sw.invalid").pathname;
  return APP_SHELL.includes(pathname);
}

/** Fill the cache with every shell asset; called from the install event. */
export async function precacheShell(cache: CacheLike, fetchFn: FetchFn): Promise<void> {
  for (const url of APP_SHELL) {
    const response = await fetchFn(url);
    if (!response.ok) {
      throw new Error(`precache of ${url} failed with ${response.status}`);
    }
    await cache.put(url, response);
  }
}

/**
 * Routing for one GET request:
 * shell -> cache first, then network (refreshing the cache);
 * API   -> network first, caching good responses, cache fallback offline;
 * other -> network only.
 */
export async function respond(url: string, cache: CacheLike, fetchFn: FetchFn): Promise<Response> {
  if (isShellRequest(url)) {
    const cached = await cache.match(url);
    if (cached !== undefined) return cached;
    const fresh = await fetchFn(url);
    if (fresh.ok) await cache.put(url, fresh.clone());
    return fresh;
  }
  if (isApiRequest(url)) {
    try {
      const fresh = await fetchFn(url);
      if (fresh.ok) await cache.put(url, fresh.clone());
      return fresh;
    } catch (error) {
      const cached = await cache.match(url);
      if (cached !== undefined) return cached;
      throw error;
    }
  }
  return fetchFn(url);
}

/* Event glue; runs only inside a real service worker scope. */

interface SwScope {
  addEventListener(type: string, listener: (event: never) => void): void;
  skipWaiting(): Promise<void>;
  clients: { claim(): Promise<void> };
  caches: { open(name: string): Promise<CacheLike> };
}

const scope = globalThis as unknown as Partial<SwScope>;

if (scope.clients !== undefined && scope.caches !== undefined && scope.addEventListener) {
  const sw = scope as SwScope;

  sw.addEventListener("install", ((event: { waitUntil(p: Promise<unknown>): void }) => {
    event.waitUntil(
      sw.caches
        .open(CACHE_NAME)
        .then((cache) => precacheShell(cache, (url) => fetch(url)))
        .then(() => sw.skipWaiting()),
    );
  }) as never);

  sw.addEventListener("activate", ((event: { waitUntil(p: Promise<unknown>): void }) => {
    event.waitUntil(sw.clients.claim());
  }) as never);

  sw.addEventListener("fetch", ((event: {
    request: { url: string; method: string };
    respondWith(p: Promise<Response>): void;
  }) => {
    if (event.request.method !== "GET") return;
    event.respondWith(
      sw.caches.open(CACHE_NAME).then((cache) => respond(event.request.url, cache, (url) => fetch(url))),
    );
  }) as never);
}
