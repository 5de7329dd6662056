import { defineConfig } from 'vite';

export default defineConfig({
  server: {
    proxy: {
      // dev-mode pass-through to a locally running sandbox service
      '/session': 'http://127.0.0.1:8000',
      '/healthz': 'http://127.0.0.1:8000',
      '/schema': 'http://127.0.0.1:8000',
    },
  },
  test: {
    environment: 'jsdom',
  },
});
